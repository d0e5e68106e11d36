//! Seeded synthetic data: pseudo-word sections, query profiles and whole
//! input corpora. Used by tests, benchmarks and the demo fixtures.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::entities::{Entity, EntityDictionary, EntityKey, EntityKind, EntityMention};
use crate::ingest::SectionDoc;
use crate::query::{ProfileOrigin, QueryProfile};
use crate::textproc::TextProcessor;

const SYLLABLES: &[&str] = &["ka", "lo", "mi", "ne", "su", "ta", "ri", "vo", "pe", "du", "zan", "gor"];

/// The `i`-th pseudo-word. Distinct for distinct `i`, at least two
/// syllables, never an English stopword.
pub fn word(i: usize) -> String {
    let base = SYLLABLES.len();
    let mut n = i + base; // guarantees two syllables
    let mut parts = Vec::new();
    while n > 0 {
        parts.push(SYLLABLES[n % base]);
        n /= base;
    }
    parts.reverse();
    parts.concat()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sentence_text<R: Rng>(rng: &mut R, vocab: usize, len: usize) -> String {
    let words: Vec<String> = (0..len).map(|_| word(rng.gen_range(0..vocab))).collect();
    let mut s = words.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s.push('.');
    s
}

/// A section of `sentences` sentences over a `vocab`-word pseudo vocabulary,
/// segmented with `text`. Every sentence carries 1 to `max_len` words.
/// About a third of the sentences mention one of `entities`.
pub fn section<R: Rng>(
    rng: &mut R,
    text: &TextProcessor,
    sentences: usize,
    vocab: usize,
    max_len: usize,
    entities: &[EntityKey],
) -> SectionDoc {
    let raw: Vec<String> = (0..sentences)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            sentence_text(rng, vocab, len)
        })
        .collect();
    let joined = raw.join(" ");
    let mut doc = SectionDoc::new(0, "Synthetic", joined.clone());
    doc.sentences = text.sentences(&joined);
    debug_assert_eq!(doc.sentences.len(), sentences);
    if !entities.is_empty() {
        for u in &doc.sentences {
            if rng.gen_bool(1.0 / 3.0) {
                let e = entities.choose(rng).expect("non-empty").clone();
                doc.mentions.push(EntityMention {
                    surface: e.canonical().to_owned(),
                    entity: e,
                    section_id: 0,
                    sentence_id: u.id,
                    start: 0,
                    end: 0,
                });
            }
        }
    }
    doc
}

/// A profile of `terms` random vocabulary words with random weights and up
/// to `max_entities` entities drawn from `entities`.
pub fn profile<R: Rng>(rng: &mut R, vocab: usize, terms: usize, entities: &[EntityKey], max_entities: usize) -> QueryProfile {
    let weights: Vec<(String, f64)> = (0..terms).map(|_| (word(rng.gen_range(0..vocab)), rng.gen_range(0.05..1.0))).collect();
    let k = rng.gen_range(0..=max_entities.min(entities.len()));
    let chosen: Vec<EntityKey> = entities.choose_multiple(rng, k).cloned().collect();
    QueryProfile::from_weights(weights, ProfileOrigin::Expanded).with_entities(chosen)
}

pub fn entity_keys(n: usize) -> Vec<EntityKey> {
    (0..n).map(|i| EntityKey::new(EntityKind::ALL[i % 3], format!("ent{i}"))).collect()
}

/// Curated-style dictionary whose aliases the corpus generator plants.
pub fn dictionary() -> EntityDictionary {
    let e = |kind, canonical: &str, aliases: &[&str]| Entity {
        kind,
        canonical: canonical.to_owned(),
        aliases: aliases.iter().map(|s| s.to_string()).chain([canonical.to_owned()]).collect::<BTreeSet<_>>(),
    };
    EntityDictionary::from_entities([
        e(EntityKind::Task, "machine translation", &["MT"]),
        e(EntityKind::Task, "question answering", &["QA"]),
        e(EntityKind::Task, "summarization", &["text summarization"]),
        e(EntityKind::Dataset, "SQuAD", &["SQuAD2.0"]),
        e(EntityKind::Dataset, "WMT14", &[]),
        e(EntityKind::Dataset, "CNN/DailyMail", &[]),
        e(EntityKind::Metric, "BLEU", &[]),
        e(EntityKind::Metric, "ROUGE", &["ROUGE-L"]),
        e(EntityKind::Metric, "F1", &["F1 score"]),
    ])
}

const PLANTED: &[&str] = &[
    "machine translation", "MT", "question answering", "summarization", "SQuAD", "WMT14",
    "CNN/DailyMail", "BLEU", "ROUGE", "F1 score",
];
const VENUES: &[&str] = &["ACL", "EMNLP", "NAACL", "COLING", "arXiv"];
const SURNAMES: &[&str] = &["Ito", "Novak", "Garcia", "Okafor", "Lindqvist", "Chen", "Haddad", "Moreau", "Singh", "Kowalski"];
const GIVEN: &[&str] = &["A.", "B.", "C.", "D.", "E.", "F."];
const HEADINGS: &[&str] = &["Introduction", "Related Work", "Method", "Experiments", "Results", "Discussion", "Conclusion"];

#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub papers: usize,
    /// Extra records that duplicate earlier papers from another source.
    pub duplicates: usize,
    pub sections: (usize, usize),
    pub sentences: (usize, usize),
    pub vocab: usize,
    pub subsection_prob: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self { papers: 10, duplicates: 0, sections: (2, 5), sentences: (3, 14), vocab: 300, subsection_prob: 0.3 }
    }
}

fn paragraph<R: Rng>(rng: &mut R, spec: &CorpusSpec) -> String {
    let n = rng.gen_range(spec.sentences.0..=spec.sentences.1);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(4..=16);
            let mut s = sentence_text(rng, spec.vocab, len);
            if rng.gen_bool(0.25) {
                s.pop();
                s.push_str(&format!(" using {}.", PLANTED.choose(rng).expect("non-empty")));
            }
            if rng.gen_bool(0.1) {
                s.pop();
                s.push_str(&format!(" as shown in Figure {}.", rng.gen_range(1..6)));
            }
            s
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Input-schema JSON records. Paper `i` has id `p{i:04}` and a title that
/// starts with a word unique to it; duplicates follow the originals with
/// ids `dup{j:04}`, the same title up to case and punctuation, and a
/// different source.
pub fn corpus(seed: u64, spec: &CorpusSpec) -> Vec<Value> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(spec.papers + spec.duplicates);
    for i in 0..spec.papers {
        let unique = word(10_000 + i);
        let title = format!("{} {} {}", unique, word(rng.gen_range(0..spec.vocab)), word(rng.gen_range(0..spec.vocab)));
        let n_authors = rng.gen_range(1..=4);
        let authors: Vec<String> = (0..n_authors)
            .map(|_| format!("{} {}", GIVEN.choose(&mut rng).unwrap(), SURNAMES.choose(&mut rng).unwrap()))
            .collect();
        let venue = *VENUES.choose(&mut rng).unwrap();
        let source = if venue == "arXiv" { "arxiv" } else { "acl" };
        let n_sections = rng.gen_range(spec.sections.0..=spec.sections.1);
        let mut sections = Vec::new();
        for h in 0..n_sections {
            sections.push(json!({"title": HEADINGS[h % HEADINGS.len()], "depth": 1, "text": paragraph(&mut rng, spec)}));
            if rng.gen_bool(spec.subsection_prob) {
                sections.push(json!({"title": format!("{}.1 Details", h + 1), "depth": 2, "text": paragraph(&mut rng, spec)}));
            }
        }
        out.push(json!({
            "id": format!("p{i:04}"),
            "title": title,
            "abstract": paragraph(&mut rng, &CorpusSpec { sentences: (1, 3), ..spec.clone() }),
            "authors": authors,
            "venue": venue,
            "year": rng.gen_range(2012..=2021),
            "source": source,
            "sections": sections,
            "figures": [{"ref_id": "fig-1", "caption": "Overview of the approach."}],
        }));
    }
    for j in 0..spec.duplicates.min(spec.papers) {
        let mut dup = out[j * spec.papers / spec.duplicates.max(1)].clone();
        dup["id"] = json!(format!("dup{j:04}"));
        let title = dup["title"].as_str().unwrap().to_uppercase() + ".";
        dup["title"] = json!(title);
        dup["source"] = json!(if dup["source"] == "acl" { "arxiv" } else { "acl" });
        out.push(dup);
    }
    out
}

pub fn corpus_jsonl(seed: u64, spec: &CorpusSpec) -> String {
    corpus(seed, spec).iter().map(|v| format!("{v}\n")).collect()
}
