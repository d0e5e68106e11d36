//! Turning an information need into a weighted [`QueryProfile`].
//!
//! Three routes, picked by [`QueryBuilder::build`]:
//!
//! * short queries (at most `verbosity.threshold` content tokens) are expanded
//!   by pseudo-relevance feedback over the top-ranked papers;
//! * verbose queries are weighted by a fixed-point iteration between term
//!   weights and query-sentence importance;
//! * with no query at all, the paper's top tf-idf unigrams stand in for one,
//!   all with the same weight.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::entities::{EntityDictionary, EntityKey};
use crate::index::Index;
use crate::ingest::PaperRecord;
use crate::textproc::{segment_sentences, TextProcessor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileOrigin {
    Expanded,
    VerboseWeighted,
    KeyphraseSurrogate,
}

impl ProfileOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileOrigin::Expanded => "expanded",
            ProfileOrigin::VerboseWeighted => "verbose_weighted",
            ProfileOrigin::KeyphraseSurrogate => "keyphrase_surrogate",
        }
    }
}

/// Weighted unigram terms plus the entity set the summary should cover.
/// Term weights are L1-normalized whenever the profile is non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryProfile {
    pub terms: BTreeMap<String, f64>,
    pub entities: BTreeSet<EntityKey>,
    pub origin: ProfileOrigin,
}

impl QueryProfile {
    pub fn empty(origin: ProfileOrigin) -> Self {
        Self { terms: BTreeMap::new(), entities: BTreeSet::new(), origin }
    }

    /// Builds a profile from raw weights, dropping non-positive entries and
    /// L1-normalizing the rest.
    pub fn from_weights(weights: impl IntoIterator<Item = (String, f64)>, origin: ProfileOrigin) -> Self {
        let mut terms: BTreeMap<String, f64> = BTreeMap::new();
        for (t, w) in weights {
            if w > 0.0 && w.is_finite() {
                *terms.entry(t).or_default() += w;
            }
        }
        let total: f64 = terms.values().sum();
        if total > 0.0 {
            terms.values_mut().for_each(|w| *w /= total);
        }
        Self { terms, entities: BTreeSet::new(), origin }
    }

    pub fn with_entities(mut self, entities: impl IntoIterator<Item = EntityKey>) -> Self {
        self.entities.extend(entities);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.terms.get(term).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionConfig {
    pub top_docs: usize,
    pub profile_size: usize,
    /// Share of the final weight carried by the original query model; the
    /// remainder comes from the feedback model.
    pub original_weight: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self { top_docs: 10, profile_size: 100, original_weight: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerbosityConfig {
    pub threshold: usize,
}

impl Default for VerbosityConfig {
    fn default() -> Self {
        Self { threshold: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyphraseConfig {
    pub count: usize,
}

impl Default for KeyphraseConfig {
    fn default() -> Self {
        Self { count: 15 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { tol: 1e-6, max_iters: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryConfig {
    pub expansion: ExpansionConfig,
    pub verbosity: VerbosityConfig,
    pub keyphrase: KeyphraseConfig,
    pub fixedpoint: FixedPointConfig,
}

fn dedup_keep_order(tokens: &[String]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    tokens.iter().filter(|t| seen.insert(t.as_str())).cloned().collect()
}

fn relative_frequencies(tokens: &[String]) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for t in tokens {
        *out.entry(t.clone()).or_default() += 1.0;
    }
    let n = tokens.len() as f64;
    out.values_mut().for_each(|v| *v /= n);
    out
}

/// Pseudo-relevance feedback expansion of a short query.
///
/// The top `cfg.top_docs` papers are retrieved and every term `t` in them is
/// scored by `Σ_d relfreq(t, d) · score(d) / Σ_d score(d)`. The profile keeps
/// every original content token, fills up to `cfg.profile_size` terms with
/// the best-scored feedback terms (ties by term), and mixes the original
/// query model with the feedback model by `cfg.original_weight`.
///
/// When the query retrieves nothing the profile is the normalized original
/// tokens.
pub fn expand_query(query_tokens: &[String], index: &Index, cfg: &ExpansionConfig) -> QueryProfile {
    let stop = index.text_processor().stopwords();
    let content: Vec<String> = query_tokens.iter().filter(|t| !t.is_empty() && !stop.contains(t)).cloned().collect();
    if content.is_empty() || cfg.profile_size == 0 {
        return QueryProfile::empty(ProfileOrigin::Expanded);
    }
    let mut originals = dedup_keep_order(&content);
    originals.truncate(cfg.profile_size);
    let query_model = relative_frequencies(&content);

    let top = index.top_docs(&originals, cfg.top_docs);
    let score_total: f64 = top.iter().map(|(_, s)| s).sum();
    if top.is_empty() || score_total <= 0.0 {
        return QueryProfile::from_weights(
            originals.iter().map(|t| (t.clone(), query_model[t])),
            ProfileOrigin::Expanded,
        );
    }

    let mut feedback: BTreeMap<&str, f64> = BTreeMap::new();
    for (id, score) in &top {
        let Some(counts) = index.doc_term_counts(id) else { continue };
        let total: u32 = counts.values().sum();
        if total == 0 {
            continue;
        }
        for (term, &c) in counts {
            *feedback.entry(term.as_str()).or_default() += f64::from(c) / f64::from(total) * score / score_total;
        }
    }

    let original_set: BTreeSet<&str> = originals.iter().map(String::as_str).collect();
    let mut candidates: Vec<(&str, f64)> =
        feedback.iter().filter(|(t, _)| !original_set.contains(*t)).map(|(t, w)| (*t, *w)).collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    candidates.truncate(cfg.profile_size - originals.len());

    let lambda = cfg.original_weight.clamp(0.0, 1.0);
    let fb = |t: &str| feedback.get(t).copied().unwrap_or(0.0);
    let mut weights: Vec<(String, f64)> = originals
        .iter()
        .map(|t| (t.clone(), lambda * query_model[t] + (1.0 - lambda) * fb(t)))
        .collect();
    weights.extend(candidates.into_iter().map(|(t, w)| (t.to_owned(), (1.0 - lambda) * w)));
    // Originals must survive normalization even when lambda is 0 and the
    // feedback never saw them.
    if lambda == 0.0 {
        let floor = weights.iter().map(|(_, w)| *w).filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min);
        let floor = if floor.is_finite() { floor } else { 1.0 };
        for (t, w) in &mut weights {
            if original_set.contains(t.as_str()) && *w <= 0.0 {
                *w = floor;
            }
        }
    }
    QueryProfile::from_weights(weights, ProfileOrigin::Expanded)
}

/// Fixed-point term weighting of a verbose query given as normalized
/// sentences, starting from the uniform weight 1/|V|.
pub fn weight_verbose(sentences: &[Vec<String>], cfg: &FixedPointConfig) -> QueryProfile {
    weight_verbose_from(sentences, None, cfg)
}

/// Same as [`weight_verbose`] with an explicit uniform starting weight.
///
/// Each round sets `importance(s) = Σ_t w(t)·relfreq(t, s)` and then
/// `w(t) = Σ_s importance(s)·relfreq(t, s)`, renormalizing both to sum to
/// one. Iteration stops once no weight moves by `cfg.tol` or after
/// `cfg.max_iters` rounds.
pub fn weight_verbose_from(sentences: &[Vec<String>], init: Option<f64>, cfg: &FixedPointConfig) -> QueryProfile {
    let rf: Vec<BTreeMap<String, f64>> =
        sentences.iter().filter(|s| !s.is_empty()).map(|s| relative_frequencies(s)).collect();
    let vocab: BTreeSet<&str> = rf.iter().flat_map(|m| m.keys().map(String::as_str)).collect();
    if vocab.is_empty() {
        return QueryProfile::empty(ProfileOrigin::VerboseWeighted);
    }
    let start = init.filter(|v| *v > 0.0).unwrap_or(1.0 / vocab.len() as f64);
    let mut w: BTreeMap<&str, f64> = vocab.iter().map(|t| (*t, start)).collect();
    let total: f64 = w.values().sum();
    w.values_mut().for_each(|v| *v /= total);

    for _ in 0..cfg.max_iters {
        let mut importance: Vec<f64> =
            rf.iter().map(|s| s.iter().map(|(t, f)| w[t.as_str()] * f).sum()).collect();
        let isum: f64 = importance.iter().sum();
        if isum <= 0.0 {
            break;
        }
        importance.iter_mut().for_each(|v| *v /= isum);

        let mut next: BTreeMap<&str, f64> = vocab.iter().map(|t| (*t, 0.0)).collect();
        for (s, imp) in rf.iter().zip(&importance) {
            for (t, f) in s {
                *next.get_mut(t.as_str()).expect("term in vocabulary") += imp * f;
            }
        }
        let nsum: f64 = next.values().sum();
        next.values_mut().for_each(|v| *v /= nsum);
        let delta = next.iter().map(|(t, v)| (v - w[t]).abs()).fold(0.0, f64::max);
        w = next;
        if delta < cfg.tol {
            break;
        }
    }
    QueryProfile::from_weights(w.into_iter().map(|(t, v)| (t.to_owned(), v)), ProfileOrigin::VerboseWeighted)
}

/// The paper's top tf-idf unigrams against the indexed corpus, all with the
/// same weight. `idf = ln(1 + N / df)` keeps single-paper corpora usable.
pub fn keyphrase_surrogate(paper: &PaperRecord, index: &Index, cfg: &KeyphraseConfig) -> QueryProfile {
    let owned;
    let counts = match index.doc_term_counts(&paper.paper_id) {
        Some(c) => c,
        None => {
            owned = paper_term_counts(paper, index.text_processor());
            &owned
        }
    };
    let n = index.len().max(1) as f64;
    let mut scored: Vec<(&str, f64)> = counts
        .iter()
        .map(|(t, &c)| {
            let df = index.doc_frequency(t).max(1) as f64;
            (t.as_str(), f64::from(c) * (1.0 + n / df).ln())
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(cfg.count);
    QueryProfile::from_weights(scored.into_iter().map(|(t, _)| (t.to_owned(), 1.0)), ProfileOrigin::KeyphraseSurrogate)
}

fn paper_term_counts(paper: &PaperRecord, text: &TextProcessor) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    let mut add = |s: &str| {
        for t in text.normalize(s) {
            *counts.entry(t).or_default() += 1;
        }
    };
    add(&paper.title);
    add(&paper.abstract_text);
    for s in &paper.sections {
        add(&s.text);
    }
    counts
}

/// Routes a request to the right profile builder and attaches the entity
/// set: explicit filter entities plus any dictionary entity mentioned in the
/// query (or, for the surrogate, in the paper's title and abstract).
pub struct QueryBuilder<'a> {
    pub index: &'a Index,
    pub dictionary: &'a EntityDictionary,
    pub cfg: &'a QueryConfig,
}

impl<'a> QueryBuilder<'a> {
    pub fn new(index: &'a Index, dictionary: &'a EntityDictionary, cfg: &'a QueryConfig) -> Self {
        Self { index, dictionary, cfg }
    }

    pub fn is_verbose(&self, content_tokens: usize) -> bool {
        content_tokens > self.cfg.verbosity.threshold
    }

    /// Profile for a free-text query; `None` when it has no content tokens.
    pub fn from_query(&self, raw: &str, explicit: &BTreeSet<EntityKey>) -> Option<QueryProfile> {
        let text = self.index.text_processor();
        let tokens = text.normalize(raw);
        if tokens.is_empty() {
            return None;
        }
        let profile = if self.is_verbose(tokens.len()) {
            let sentences: Vec<Vec<String>> = segment_sentences(raw).into_iter().map(|s| text.normalize(s)).collect();
            weight_verbose(&sentences, &self.cfg.fixedpoint)
        } else {
            expand_query(&tokens, self.index, &self.cfg.expansion)
        };
        let found = self.dictionary.entities_in(raw);
        Some(profile.with_entities(explicit.iter().cloned().chain(found)))
    }

    pub fn surrogate(&self, paper: &PaperRecord, explicit: &BTreeSet<EntityKey>) -> QueryProfile {
        let profile = keyphrase_surrogate(paper, self.index, &self.cfg.keyphrase);
        let found = self.dictionary.entities_in(&format!("{}\n{}", paper.title, paper.abstract_text));
        profile.with_entities(explicit.iter().cloned().chain(found))
    }

    /// Query profile when a query is present, keyphrase surrogate otherwise.
    pub fn build(&self, raw: Option<&str>, paper: &PaperRecord, explicit: &BTreeSet<EntityKey>) -> QueryProfile {
        raw.and_then(|q| self.from_query(q, explicit)).unwrap_or_else(|| self.surrogate(paper, explicit))
    }
}
