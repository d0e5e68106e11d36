//! Query-focused extractive summarization of one section at a time.
//!
//! A candidate summary is a set of exactly `L` sentences. It is scored by
//! five objectives, each in `[0, 1]`:
//!
//! | objective        | definition                                                        |
//! |------------------|-------------------------------------------------------------------|
//! | query saliency   | cosine(pooled summary unigrams, profile term weights)             |
//! | entity coverage  | Jaccard(entities in summary, profile entities); 1 if none wanted  |
//! | diversity        | entropy of pooled summary unigrams / ln(distinct summary terms)   |
//! | text coverage    | cosine(pooled summary bigrams, section bigrams)                   |
//! | length           | mean selected sentence length / longest sentence in the section   |
//!
//! Each value is floored at [`OBJECTIVE_FLOOR`] and the five are multiplied.
//!
//! The subset itself is found with the cross-entropy method: every sentence
//! starts with inclusion probability `L / n`; each iteration draws
//! `sample_size` subsets by sequential weighted sampling without
//! replacement, keeps the top `elite_fraction` by product, and moves each
//! probability toward its elite inclusion frequency with weight
//! `smoothing_alpha`. The best subset seen in any iteration is returned in
//! document order.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entities::{EntityKey, EntityMention};
use crate::ingest::{PaperRecord, SectionDoc};
use crate::query::QueryProfile;
use crate::textproc::SentenceUnit;

pub const OBJECTIVE_FLOOR: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum SummarizeError {
    #[error("section {0} has no sentences")]
    EmptySection(u32),
    #[error("invalid summarizer configuration: {0}")]
    InvalidConfig(String),
    #[error("sentence id {id} is out of range for a section of {len} sentences")]
    InvalidSelection { id: u32, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CeConfig {
    pub sample_size: usize,
    pub elite_fraction: f64,
    pub smoothing_alpha: f64,
    pub max_iterations: usize,
    pub stop_tol: f64,
    pub summary_length: usize,
    pub seed: u64,
    /// Score the candidates of one iteration on the rayon pool. Results are
    /// identical either way.
    pub parallel: bool,
}

impl Default for CeConfig {
    fn default() -> Self {
        Self {
            sample_size: 500,
            elite_fraction: 0.1,
            smoothing_alpha: 0.7,
            max_iterations: 60,
            stop_tol: 1e-3,
            summary_length: 10,
            seed: 0,
            parallel: true,
        }
    }
}

impl CeConfig {
    pub fn validate(&self) -> Result<(), SummarizeError> {
        let bad = |m: &str| Err(SummarizeError::InvalidConfig(m.to_owned()));
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return bad("elite_fraction must lie in (0, 1)");
        }
        if !(self.smoothing_alpha > 0.0 && self.smoothing_alpha <= 1.0) {
            return bad("smoothing_alpha must lie in (0, 1]");
        }
        if self.summary_length == 0 {
            return bad("summary_length must be at least 1");
        }
        if self.sample_size == 0 {
            return bad("sample_size must be at least 1");
        }
        Ok(())
    }

    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.sample_size as f64).ceil() as usize).clamp(1, self.sample_size)
    }

    pub fn with_length(mut self, length: usize) -> Self {
        self.summary_length = length;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub query_saliency: f64,
    pub entity_coverage: f64,
    pub diversity: f64,
    pub text_coverage: f64,
    pub length: f64,
    pub product: f64,
}

impl ObjectiveBreakdown {
    /// Floors every raw component and multiplies them.
    pub fn from_raw(query_saliency: f64, entity_coverage: f64, diversity: f64, text_coverage: f64, length: f64) -> Self {
        let f = |v: f64| v.clamp(OBJECTIVE_FLOOR, 1.0);
        let (q, e, d, t, l) = (f(query_saliency), f(entity_coverage), f(diversity), f(text_coverage), f(length));
        Self { query_saliency: q, entity_coverage: e, diversity: d, text_coverage: t, length: l, product: q * e * d * t * l }
    }

    pub fn components(&self) -> [f64; 5] {
        [self.query_saliency, self.entity_coverage, self.diversity, self.text_coverage, self.length]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSummary {
    pub section_id: u32,
    /// Sentence ids in document order.
    pub selected: Vec<u32>,
    pub breakdown: ObjectiveBreakdown,
    pub iterations_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperSummary {
    pub paper_id: String,
    pub per_section: Vec<SectionSummary>,
}

impl PaperSummary {
    pub fn total_sentences(&self) -> usize {
        self.per_section.iter().map(|s| s.selected.len()).sum()
    }
}

// Reference implementations of the five objectives over token maps. The
// optimizer uses `PreparedSection`, which computes the same quantities over
// interned sparse vectors.

fn pooled_unigrams<'a>(sentences: &[&'a SentenceUnit]) -> BTreeMap<&'a str, f64> {
    let mut out = BTreeMap::new();
    for s in sentences {
        for t in &s.tokens {
            *out.entry(t.as_str()).or_insert(0.0) += 1.0;
        }
    }
    out
}

fn pooled_bigrams<'a>(sentences: impl IntoIterator<Item = &'a SentenceUnit>) -> BTreeMap<(&'a str, &'a str), f64> {
    let mut out = BTreeMap::new();
    for s in sentences {
        for w in s.tokens.windows(2) {
            *out.entry((w[0].as_str(), w[1].as_str())).or_insert(0.0) += 1.0;
        }
    }
    out
}

fn cosine<K: Ord>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, v)| b.get(k).map(|w| v * w)).sum();
    let na = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Cosine between the summary's pooled unigram bag and the profile weights.
pub fn query_saliency(summary: &[&SentenceUnit], profile: &QueryProfile) -> f64 {
    let pooled = pooled_unigrams(summary);
    let weights: BTreeMap<&str, f64> = profile.terms.iter().map(|(t, w)| (t.as_str(), *w)).collect();
    cosine(&pooled, &weights)
}

/// Jaccard similarity; an empty `e_q` imposes nothing and scores 1.
pub fn entity_coverage(summary: &BTreeSet<EntityKey>, e_q: &BTreeSet<EntityKey>) -> f64 {
    if e_q.is_empty() {
        return 1.0;
    }
    let inter = summary.intersection(e_q).count();
    let union = summary.union(e_q).count();
    inter as f64 / union as f64
}

/// Shannon entropy of a bag's distribution normalized by `ln(#terms)`.
pub fn normalized_entropy<'a>(counts: impl IntoIterator<Item = &'a f64>) -> f64 {
    let counts: Vec<f64> = counts.into_iter().copied().filter(|c| *c > 0.0).collect();
    if counts.len() < 2 {
        return 0.0;
    }
    let total: f64 = counts.iter().sum();
    let h: f64 = counts.iter().map(|c| c / total).map(|p| -p * p.ln()).sum();
    (h / (counts.len() as f64).ln()).clamp(0.0, 1.0)
}

pub fn diversity(summary: &[&SentenceUnit]) -> f64 {
    normalized_entropy(pooled_unigrams(summary).values())
}

/// Cosine between the summary's pooled bigram bag and the section's.
pub fn text_coverage(summary: &[&SentenceUnit], section: &SectionDoc) -> f64 {
    cosine(&pooled_bigrams(summary.iter().copied()), &pooled_bigrams(section.sentences.iter()))
}

pub fn length_objective(summary: &[&SentenceUnit], section: &SectionDoc) -> f64 {
    let max = section.sentences.iter().map(|s| s.token_count).max().unwrap_or(0);
    if summary.is_empty() || max == 0 {
        return 0.0;
    }
    let mean = summary.iter().map(|s| s.token_count as f64).sum::<f64>() / summary.len() as f64;
    (mean / max as f64).clamp(0.0, 1.0)
}

fn summary_entities(section: &SectionDoc, selected: &BTreeSet<u32>) -> BTreeSet<EntityKey> {
    section
        .mentions
        .iter()
        .filter(|m| selected.contains(&m.sentence_id))
        .map(|m| m.entity.clone())
        .collect()
}

/// Scores `selected` sentence ids of `section` against `profile`.
pub fn score_summary(selected: &[u32], section: &SectionDoc, profile: &QueryProfile) -> Result<ObjectiveBreakdown, SummarizeError> {
    let mut picked = Vec::with_capacity(selected.len());
    for &id in selected {
        let s = section
            .sentences
            .get(id as usize)
            .ok_or(SummarizeError::InvalidSelection { id, len: section.sentences.len() })?;
        picked.push(s);
    }
    let ids: BTreeSet<u32> = selected.iter().copied().collect();
    Ok(ObjectiveBreakdown::from_raw(
        query_saliency(&picked, profile),
        entity_coverage(&summary_entities(section, &ids), &profile.entities),
        diversity(&picked),
        text_coverage(&picked, section),
        length_objective(&picked, section),
    ))
}

type Sparse = Vec<(u32, f64)>;

fn intern<'a>(vocab: &mut HashMap<&'a str, u32>, key: &'a str) -> u32 {
    let next = vocab.len() as u32;
    *vocab.entry(key).or_insert(next)
}

fn to_sparse(counts: HashMap<u32, f64>) -> Sparse {
    let mut v: Sparse = counts.into_iter().collect();
    v.sort_unstable_by_key(|(id, _)| *id);
    v
}

/// A section compiled for fast repeated scoring of candidate subsets.
pub struct PreparedSection {
    unigrams: Vec<Sparse>,
    bigrams: Vec<Sparse>,
    entities: Vec<Vec<u32>>,
    lengths: Vec<f64>,
    max_length: f64,
    profile: Vec<f64>,
    profile_norm: f64,
    section_bigrams: Vec<f64>,
    section_bigram_norm: f64,
    wanted: Vec<bool>,
    wanted_count: usize,
}

/// Per-thread accumulation buffers for [`PreparedSection::score`].
pub struct Scratch {
    uni: Vec<f64>,
    bi: Vec<f64>,
    ent: Vec<bool>,
    touched_uni: Vec<u32>,
    touched_bi: Vec<u32>,
    touched_ent: Vec<u32>,
}

impl PreparedSection {
    pub fn new(section: &SectionDoc, profile: &QueryProfile) -> Self {
        let mut uni_vocab: HashMap<&str, u32> = HashMap::new();
        let mut bi_vocab: HashMap<&str, u32> = HashMap::new();
        let mut ent_vocab: HashMap<&EntityKey, u32> = HashMap::new();
        let bigram_keys: Vec<Vec<String>> = section
            .sentences
            .iter()
            .map(|s| s.tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect())
            .collect();

        let mut unigrams = Vec::with_capacity(section.sentences.len());
        let mut bigrams = Vec::with_capacity(section.sentences.len());
        for (s, keys) in section.sentences.iter().zip(&bigram_keys) {
            let mut u: HashMap<u32, f64> = HashMap::new();
            for t in &s.tokens {
                *u.entry(intern(&mut uni_vocab, t)).or_default() += 1.0;
            }
            unigrams.push(to_sparse(u));
            let mut b: HashMap<u32, f64> = HashMap::new();
            for k in keys {
                *b.entry(intern(&mut bi_vocab, k)).or_default() += 1.0;
            }
            bigrams.push(to_sparse(b));
        }

        let mut by_sentence: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); section.sentences.len()];
        let mentions: &[EntityMention] = &section.mentions;
        for m in mentions {
            if let Some(set) = by_sentence.get_mut(m.sentence_id as usize) {
                let next = ent_vocab.len() as u32;
                set.insert(*ent_vocab.entry(&m.entity).or_insert(next));
            }
        }
        let mut wanted = vec![false; ent_vocab.len()];
        for e in &profile.entities {
            if let Some(&id) = ent_vocab.get(e) {
                wanted[id as usize] = true;
            }
        }

        let mut profile_vec = vec![0.0; uni_vocab.len()];
        for (t, w) in &profile.terms {
            if let Some(&id) = uni_vocab.get(t.as_str()) {
                profile_vec[id as usize] = *w;
            }
        }
        let profile_norm = profile.terms.values().map(|w| w * w).sum::<f64>().sqrt();

        let mut section_bigrams = vec![0.0; bi_vocab.len()];
        for b in &bigrams {
            for (id, c) in b {
                section_bigrams[*id as usize] += c;
            }
        }
        let section_bigram_norm = section_bigrams.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lengths: Vec<f64> = section.sentences.iter().map(|s| s.token_count as f64).collect();

        Self {
            unigrams,
            bigrams,
            entities: by_sentence.into_iter().map(|s| s.into_iter().collect()).collect(),
            max_length: lengths.iter().copied().fold(0.0, f64::max),
            lengths,
            profile: profile_vec,
            profile_norm,
            section_bigrams,
            section_bigram_norm,
            wanted,
            wanted_count: profile.entities.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            uni: vec![0.0; self.profile.len()],
            bi: vec![0.0; self.section_bigrams.len()],
            ent: vec![false; self.wanted.len()],
            touched_uni: Vec::new(),
            touched_bi: Vec::new(),
            touched_ent: Vec::new(),
        }
    }

    /// Scores a subset given as sentence indices.
    pub fn score(&self, selected: &[usize], scratch: &mut Scratch) -> ObjectiveBreakdown {
        for &i in selected {
            for &(id, c) in &self.unigrams[i] {
                if scratch.uni[id as usize] == 0.0 {
                    scratch.touched_uni.push(id);
                }
                scratch.uni[id as usize] += c;
            }
            for &(id, c) in &self.bigrams[i] {
                if scratch.bi[id as usize] == 0.0 {
                    scratch.touched_bi.push(id);
                }
                scratch.bi[id as usize] += c;
            }
            for &id in &self.entities[i] {
                if !scratch.ent[id as usize] {
                    scratch.ent[id as usize] = true;
                    scratch.touched_ent.push(id);
                }
            }
        }

        let (mut dot_q, mut norm_u, mut total_u) = (0.0, 0.0, 0.0);
        for &id in &scratch.touched_uni {
            let c = scratch.uni[id as usize];
            dot_q += c * self.profile[id as usize];
            norm_u += c * c;
            total_u += c;
        }
        let saliency = if norm_u == 0.0 || self.profile_norm == 0.0 {
            0.0
        } else {
            dot_q / (norm_u.sqrt() * self.profile_norm)
        };

        let distinct = scratch.touched_uni.len();
        let diversity = if distinct < 2 {
            0.0
        } else {
            let h: f64 = scratch
                .touched_uni
                .iter()
                .map(|&id| scratch.uni[id as usize] / total_u)
                .map(|p| -p * p.ln())
                .sum();
            h / (distinct as f64).ln()
        };

        let (mut dot_b, mut norm_b) = (0.0, 0.0);
        for &id in &scratch.touched_bi {
            let c = scratch.bi[id as usize];
            dot_b += c * self.section_bigrams[id as usize];
            norm_b += c * c;
        }
        let coverage = if norm_b == 0.0 || self.section_bigram_norm == 0.0 {
            0.0
        } else {
            dot_b / (norm_b.sqrt() * self.section_bigram_norm)
        };

        let entity = if self.wanted_count == 0 {
            1.0
        } else {
            let inter = scratch.touched_ent.iter().filter(|&&id| self.wanted[id as usize]).count();
            let union = scratch.touched_ent.len() + self.wanted_count - inter;
            inter as f64 / union as f64
        };

        let length = if selected.is_empty() || self.max_length == 0.0 {
            0.0
        } else {
            selected.iter().map(|&i| self.lengths[i]).sum::<f64>() / selected.len() as f64 / self.max_length
        };

        for id in scratch.touched_uni.drain(..) {
            scratch.uni[id as usize] = 0.0;
        }
        for id in scratch.touched_bi.drain(..) {
            scratch.bi[id as usize] = 0.0;
        }
        for id in scratch.touched_ent.drain(..) {
            scratch.ent[id as usize] = false;
        }

        ObjectiveBreakdown::from_raw(saliency, entity, diversity, coverage, length)
    }
}

/// Draws exactly `k` distinct indices, each step picking among the remaining
/// indices with probability proportional to `weights`. Falls back to a
/// uniform pick once the remaining weight is zero. Returned sorted.
pub fn sample_subset<R: Rng>(weights: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let n = weights.len();
    let k = k.min(n);
    let mut w: Vec<f64> = weights.iter().map(|v| if v.is_finite() && *v > 0.0 { *v } else { 0.0 }).collect();
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(k);
    for step in 0..k {
        let total: f64 = w.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = 0;
            for (i, &wi) in w.iter().enumerate() {
                if wi > 0.0 {
                    acc += wi;
                    last_positive = i;
                    if r < acc {
                        pick = Some(i);
                        break;
                    }
                }
            }
            pick.unwrap_or(last_positive)
        } else {
            let nth = rng.gen_range(0..n - step);
            (0..n).filter(|&i| !taken[i]).nth(nth).expect("enough untaken indices")
        };
        taken[pick] = true;
        w[pick] = 0.0;
        out.push(pick);
    }
    out.sort_unstable();
    out
}

/// Cross-entropy search for the best `cfg.summary_length`-sentence subset.
pub fn ce_optimize(section: &SectionDoc, profile: &QueryProfile, cfg: &CeConfig) -> Result<SectionSummary, SummarizeError> {
    cfg.validate()?;
    let n = section.sentences.len();
    if n == 0 {
        return Err(SummarizeError::EmptySection(section.section_id));
    }
    let prepared = PreparedSection::new(section, profile);
    let mut scratch = prepared.scratch();
    let l = cfg.summary_length;
    if n <= l {
        let all: Vec<usize> = (0..n).collect();
        return Ok(SectionSummary {
            section_id: section.section_id,
            selected: (0..n as u32).collect(),
            breakdown: prepared.score(&all, &mut scratch),
            iterations_used: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut p = vec![l as f64 / n as f64; n];
    let elite = cfg.elite_count();
    let mut best: Option<(Vec<usize>, ObjectiveBreakdown)> = None;
    let mut iterations_used = 0;

    for iter in 1..=cfg.max_iterations {
        // All candidates come from the seeded stream before any scoring, so
        // parallel scoring cannot change the outcome.
        let samples: Vec<Vec<usize>> = (0..cfg.sample_size).map(|_| sample_subset(&p, l, &mut rng)).collect();
        let scores: Vec<ObjectiveBreakdown> = if cfg.parallel {
            samples.par_iter().map_init(|| prepared.scratch(), |sc, s| prepared.score(s, sc)).collect()
        } else {
            samples.iter().map(|s| prepared.score(s, &mut scratch)).collect()
        };

        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| scores[b].product.total_cmp(&scores[a].product).then(a.cmp(&b)));
        let top = order[0];
        if best.as_ref().is_none_or(|(_, b)| scores[top].product > b.product) {
            best = Some((samples[top].clone(), scores[top]));
        }

        let mut freq = vec![0.0; n];
        for &i in &order[..elite] {
            for &s in &samples[i] {
                freq[s] += 1.0;
            }
        }
        let mut delta: f64 = 0.0;
        for (pi, fi) in p.iter_mut().zip(&freq) {
            let next = cfg.smoothing_alpha * (fi / elite as f64) + (1.0 - cfg.smoothing_alpha) * *pi;
            delta = delta.max((next - *pi).abs());
            *pi = next;
        }
        iterations_used = iter;
        if delta < cfg.stop_tol {
            break;
        }
    }

    let (subset, breakdown) = best.expect("at least one iteration ran");
    Ok(SectionSummary {
        section_id: section.section_id,
        selected: subset.into_iter().map(|i| i as u32).collect(),
        breakdown,
        iterations_used,
    })
}

fn section_seed(seed: u64, section_id: u32) -> u64 {
    seed ^ u64::from(section_id).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Summarizes every section independently and keeps document order. A
/// section without sentences yields an empty selection.
pub fn summarize_paper(paper: &PaperRecord, profile: &QueryProfile, cfg: &CeConfig) -> Result<PaperSummary, SummarizeError> {
    cfg.validate()?;
    let mut per_section = Vec::with_capacity(paper.sections.len());
    for section in &paper.sections {
        let cfg = cfg.with_seed(section_seed(cfg.seed, section.section_id));
        match ce_optimize(section, profile, &cfg) {
            Ok(s) => per_section.push(s),
            Err(SummarizeError::EmptySection(id)) => per_section.push(SectionSummary {
                section_id: id,
                selected: Vec::new(),
                breakdown: score_summary(&[], section, profile)?,
                iterations_used: 0,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(PaperSummary { paper_id: paper.paper_id.clone(), per_section })
}

/// Identifier of the pseudo-section holding a whole paper.
pub const POOLED_SECTION_ID: u32 = 0;

/// All sentences of `paper` as one pseudo-section with sentence ids
/// renumbered in document order and entity mentions remapped to match.
/// Also returns the `(section_id, sentence_id)` origin of every pooled
/// sentence.
pub fn pool_sections(paper: &PaperRecord) -> (SectionDoc, Vec<(u32, u32)>) {
    let mut pooled = SectionDoc::new(POOLED_SECTION_ID, "Full text", String::new());
    let mut origin = Vec::new();
    let mut texts = Vec::new();
    for s in &paper.sections {
        let offset = pooled.sentences.len() as u32;
        for u in &s.sentences {
            let mut u = u.clone();
            u.id += offset;
            origin.push((s.section_id, u.id - offset));
            pooled.sentences.push(u);
        }
        pooled.mentions.extend(s.mentions.iter().map(|m| EntityMention {
            section_id: POOLED_SECTION_ID,
            sentence_id: m.sentence_id + offset,
            ..m.clone()
        }));
        texts.push(s.text.as_str());
    }
    pooled.text = texts.join("\n\n");
    (pooled, origin)
}

/// Section-agnostic summary: the whole paper treated as one section.
pub fn summarize_flat(paper: &PaperRecord, profile: &QueryProfile, target_length: usize, cfg: &CeConfig) -> Result<SectionSummary, SummarizeError> {
    if target_length == 0 {
        return Err(SummarizeError::InvalidConfig("target_length must be at least 1".into()));
    }
    let (pooled, _) = pool_sections(paper);
    ce_optimize(&pooled, profile, &cfg.with_length(target_length))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionOutput {
    pub section_id: u32,
    pub title: String,
    pub sentences: Vec<String>,
    pub objective: ObjectiveBreakdown,
    pub entities: Vec<EntityKey>,
}

/// Summary in its JSON output shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOutput {
    pub paper_id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub query_origin: Option<crate::query::ProfileOrigin>,
    pub sections: Vec<SectionOutput>,
}

impl SummaryOutput {
    pub fn new(paper: &PaperRecord, summary: &PaperSummary, profile: Option<&QueryProfile>) -> Self {
        let sections = summary
            .per_section
            .iter()
            .filter_map(|s| {
                let doc = paper.sections.iter().find(|d| d.section_id == s.section_id)?;
                let entities: BTreeSet<EntityKey> = doc.mentions.iter().map(|m| m.entity.clone()).collect();
                Some(SectionOutput {
                    section_id: s.section_id,
                    title: doc.title.clone(),
                    sentences: s
                        .selected
                        .iter()
                        .filter_map(|&i| doc.sentences.get(i as usize).map(|u| u.raw.clone()))
                        .collect(),
                    objective: s.breakdown,
                    entities: entities.into_iter().collect(),
                })
            })
            .collect();
        Self { paper_id: summary.paper_id.clone(), query_origin: profile.map(|p| p.origin), sections }
    }
}
