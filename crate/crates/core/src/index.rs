//! In-memory inverted index over titles, abstracts and section text, with
//! metadata and entity facets.
//!
//! Ranking is fielded BM25: every field keeps its own length normalization
//! and the per-field contributions are combined with fixed weights
//! (title 3, abstract 2, section 1 by default). Document frequency counts a
//! paper once regardless of how many fields contain the term.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entities::EntityKey;
use crate::ingest::PaperRecord;
use crate::textproc::TextProcessor;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("paper {0:?} is already indexed")]
    DuplicateId(String),
    #[error("a search needs a query or a non-empty filter")]
    EmptyRequest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Title,
    Abstract,
    Section,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Title, Field::Abstract, Field::Section];

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Config {
    pub k1: f64,
    pub b: f64,
    pub title_weight: f64,
    pub abstract_weight: f64,
    pub section_weight: f64,
}

impl Default for Bm25Config {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75, title_weight: 3.0, abstract_weight: 2.0, section_weight: 1.0 }
    }
}

impl Bm25Config {
    pub fn weight(&self, field: Field) -> f64 {
        match field {
            Field::Title => self.title_weight,
            Field::Abstract => self.abstract_weight,
            Field::Section => self.section_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub field: Field,
    pub tf: u32,
}

/// Read-only view of one term's postings, ordered by paper id then field.
#[derive(Debug, Clone, PartialEq)]
pub struct PostingList<'a> {
    pub term: &'a str,
    pub postings: Vec<(&'a str, Field, u32)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchFilter {
    pub venue: Option<String>,
    pub year_range: Option<(i64, i64)>,
    pub author: Option<String>,
    pub entities: BTreeSet<EntityKey>,
}

impl SearchFilter {
    pub fn is_empty(&self) -> bool {
        self.venue.is_none() && self.year_range.is_none() && self.author.is_none() && self.entities.is_empty()
    }

    pub fn with_entity(mut self, key: EntityKey) -> Self {
        self.entities.insert(key);
        self
    }

    pub fn matches(&self, paper: &PaperRecord, entities: &BTreeSet<EntityKey>) -> bool {
        if let Some(v) = &self.venue {
            if !paper.venue.eq_ignore_ascii_case(v.trim()) {
                return false;
            }
        }
        if let Some((lo, hi)) = self.year_range {
            if paper.year < lo || paper.year > hi {
                return false;
            }
        }
        if let Some(a) = &self.author {
            let needle = a.trim().to_lowercase();
            if !paper.authors.iter().any(|x| x.to_lowercase().contains(&needle)) {
                return false;
            }
        }
        self.entities.is_subset(entities)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub paper_id: String,
    pub score: f64,
    pub matched_fields: BTreeSet<Field>,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DocEntry {
    pub(crate) record: PaperRecord,
    pub(crate) field_lens: [u32; 3],
    pub(crate) term_counts: BTreeMap<String, u32>,
    pub(crate) entities: BTreeSet<EntityKey>,
}

#[derive(Debug, Clone)]
pub struct Index {
    cfg: Bm25Config,
    text: TextProcessor,
    docs: Vec<DocEntry>,
    by_id: HashMap<String, u32>,
    postings: BTreeMap<String, Vec<Posting>>,
    field_totals: [u64; 3],
}

impl PartialEq for Index {
    fn eq(&self, other: &Self) -> bool {
        self.cfg == other.cfg
            && self.text.stopwords() == other.text.stopwords()
            && self.docs == other.docs
            && self.postings == other.postings
            && self.field_totals == other.field_totals
    }
}

impl Default for Index {
    fn default() -> Self {
        Self::new(Bm25Config::default(), TextProcessor::default())
    }
}

const SNIPPET_CHARS: usize = 200;

impl Index {
    pub fn new(cfg: Bm25Config, text: TextProcessor) -> Self {
        Self {
            cfg,
            text,
            docs: Vec::new(),
            by_id: HashMap::new(),
            postings: BTreeMap::new(),
            field_totals: [0; 3],
        }
    }

    pub fn config(&self) -> &Bm25Config {
        &self.cfg
    }

    pub fn text_processor(&self) -> &TextProcessor {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    /// Posts every normalized token of the title, abstract and sections and
    /// registers the paper's metadata and entity facets. Sections without
    /// sentences are segmented first.
    pub fn index_paper(&mut self, mut record: PaperRecord) -> Result<(), IndexError> {
        if self.by_id.contains_key(&record.paper_id) {
            return Err(IndexError::DuplicateId(record.paper_id));
        }
        for s in &mut record.sections {
            if s.sentences.is_empty() && !s.text.trim().is_empty() {
                s.sentences = self.text.sentences(&s.text);
            }
        }

        let mut per_field: [BTreeMap<String, u32>; 3] = Default::default();
        let mut field_lens = [0u32; 3];
        let mut count = |field: Field, tokens: &mut dyn Iterator<Item = String>| {
            for t in tokens {
                *per_field[field.slot()].entry(t).or_default() += 1;
                field_lens[field.slot()] += 1;
            }
        };
        count(Field::Title, &mut self.text.normalize(&record.title).into_iter());
        count(Field::Abstract, &mut self.text.normalize(&record.abstract_text).into_iter());
        count(
            Field::Section,
            &mut record.sections.iter().flat_map(|s| s.sentences.iter()).flat_map(|u| u.tokens.iter().cloned()),
        );

        let doc = self.docs.len() as u32;
        let mut term_counts: BTreeMap<String, u32> = BTreeMap::new();
        let docs = &self.docs;
        for field in Field::ALL {
            for (term, &tf) in &per_field[field.slot()] {
                *term_counts.entry(term.clone()).or_default() += tf;
                let list = self.postings.entry(term.clone()).or_default();
                let key = (record.paper_id.as_str(), field);
                let at = list
                    .binary_search_by(|p| {
                        let id = docs.get(p.doc as usize).map_or(key.0, |d| d.record.paper_id.as_str());
                        (id, p.field).cmp(&key)
                    })
                    .unwrap_or_else(|e| e);
                list.insert(at, Posting { doc, field, tf });
            }
            self.field_totals[field.slot()] += u64::from(field_lens[field.slot()]);
        }
        // The new doc is pushed only after its postings are placed, so the
        // search above treats its own earlier-field postings by `key.0`.
        let entities = record.mentions().map(|m| m.entity.clone()).collect();
        self.by_id.insert(record.paper_id.clone(), doc);
        self.docs.push(DocEntry { record, field_lens, term_counts, entities });
        Ok(())
    }

    pub fn paper(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.by_id.get(paper_id).map(|&d| &self.docs[d as usize].record)
    }

    /// Papers in insertion order.
    pub fn papers(&self) -> impl Iterator<Item = &PaperRecord> {
        self.docs.iter().map(|d| &d.record)
    }

    pub fn paper_entities(&self, paper_id: &str) -> Option<&BTreeSet<EntityKey>> {
        self.by_id.get(paper_id).map(|&d| &self.docs[d as usize].entities)
    }

    /// Term counts over all fields of one paper.
    pub fn doc_term_counts(&self, paper_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.by_id.get(paper_id).map(|&d| &self.docs[d as usize].term_counts)
    }

    /// Number of papers containing `term` in any field.
    pub fn doc_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, |list| {
            let mut docs: Vec<u32> = list.iter().map(|p| p.doc).collect();
            docs.dedup();
            docs.len()
        })
    }

    pub fn postings(&self, term: &str) -> Option<PostingList<'_>> {
        self.postings.get_key_value(term).map(|(t, list)| PostingList {
            term: t,
            postings: list
                .iter()
                .map(|p| (self.docs[p.doc as usize].record.paper_id.as_str(), p.field, p.tf))
                .collect(),
        })
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.doc_frequency(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn scores(&self, query_tokens: &[String]) -> HashMap<u32, (f64, BTreeSet<Field>)> {
        let n = self.docs.len() as f64;
        let avg: Vec<f64> = self.field_totals.iter().map(|&t| if n > 0.0 { t as f64 / n } else { 0.0 }).collect();
        let unique: BTreeSet<&String> = query_tokens.iter().collect();
        let mut acc: HashMap<u32, (f64, BTreeSet<Field>)> = HashMap::new();
        for term in unique {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(term);
            for p in list {
                let len = f64::from(self.docs[p.doc as usize].field_lens[p.field.slot()]);
                let avg_len = avg[p.field.slot()];
                let norm = if avg_len > 0.0 { 1.0 - self.cfg.b + self.cfg.b * len / avg_len } else { 1.0 };
                let tf = f64::from(p.tf);
                let part = self.cfg.weight(p.field) * idf * tf * (self.cfg.k1 + 1.0) / (tf + self.cfg.k1 * norm);
                let e = acc.entry(p.doc).or_default();
                e.0 += part;
                e.1.insert(p.field);
            }
        }
        acc
    }

    /// Top-`k` papers for the query under the filter.
    ///
    /// With no query tokens the filter alone selects papers, which come back
    /// with score 0 in paper-id order.
    pub fn search(&self, query_tokens: &[String], filter: &SearchFilter, k: usize) -> Result<Vec<SearchResult>, IndexError> {
        if query_tokens.is_empty() && filter.is_empty() {
            return Err(IndexError::EmptyRequest);
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let allowed = |d: u32| {
            let e = &self.docs[d as usize];
            filter.matches(&e.record, &e.entities)
        };
        let mut hits: Vec<(u32, f64, BTreeSet<Field>)> = if query_tokens.is_empty() {
            (0..self.docs.len() as u32).filter(|&d| allowed(d)).map(|d| (d, 0.0, BTreeSet::new())).collect()
        } else {
            self.scores(query_tokens)
                .into_iter()
                .filter(|(d, (s, _))| *s > 0.0 && allowed(*d))
                .map(|(d, (s, f))| (d, s, f))
                .collect()
        };
        hits.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.docs[a.0 as usize].record.paper_id.cmp(&self.docs[b.0 as usize].record.paper_id))
        });
        hits.truncate(k);
        Ok(hits
            .into_iter()
            .map(|(d, score, matched_fields)| {
                let rec = &self.docs[d as usize].record;
                SearchResult { paper_id: rec.paper_id.clone(), score, matched_fields, snippet: snippet(rec) }
            })
            .collect())
    }

    /// Ranked `(paper_id, score)` for a query with no filter. An empty
    /// query yields an empty list.
    pub fn top_docs(&self, query_tokens: &[String], k: usize) -> Vec<(String, f64)> {
        if query_tokens.is_empty() {
            return Vec::new();
        }
        self.search(query_tokens, &SearchFilter::default(), k)
            .unwrap_or_default()
            .into_iter()
            .map(|r| (r.paper_id, r.score))
            .collect()
    }

    /// Distinct-paper counts per entity among papers matching `filter`.
    pub fn facet_counts(&self, filter: &SearchFilter) -> BTreeMap<EntityKey, usize> {
        let mut counts = BTreeMap::new();
        for d in &self.docs {
            if filter.matches(&d.record, &d.entities) {
                for e in &d.entities {
                    *counts.entry(e.clone()).or_default() += 1;
                }
            }
        }
        counts
    }

    // Snapshot support.

    pub(crate) fn raw_parts(&self) -> (&[DocEntry], &BTreeMap<String, Vec<Posting>>) {
        (&self.docs, &self.postings)
    }

    pub(crate) fn from_raw_parts(
        cfg: Bm25Config,
        text: TextProcessor,
        docs: Vec<DocEntry>,
        postings: BTreeMap<String, Vec<Posting>>,
    ) -> Self {
        let by_id = docs.iter().enumerate().map(|(i, d)| (d.record.paper_id.clone(), i as u32)).collect();
        let mut field_totals = [0u64; 3];
        for d in &docs {
            for f in Field::ALL {
                field_totals[f.slot()] += u64::from(d.field_lens[f.slot()]);
            }
        }
        Self { cfg, text, docs, by_id, postings, field_totals }
    }
}

fn snippet(rec: &PaperRecord) -> String {
    let source = if rec.abstract_text.trim().is_empty() {
        rec.sections.first().map(|s| s.text.as_str()).unwrap_or("")
    } else {
        rec.abstract_text.as_str()
    };
    let flat = source.split_whitespace().collect::<Vec<_>>().join(" ");
    match flat.char_indices().nth(SNIPPET_CHARS) {
        Some((cut, _)) => format!("{}...", &flat[..cut]),
        None => flat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entities::EntityKind;
    use crate::ingest::{SectionDoc, Source};

    fn paper(id: &str, title: &str, venue: &str, body: &str) -> PaperRecord {
        PaperRecord {
            paper_id: id.into(),
            title: title.into(),
            abstract_text: String::new(),
            authors: vec!["Ann Lee".into()],
            venue: venue.into(),
            year: 2019,
            source: Source::Arxiv,
            sections: vec![SectionDoc::new(0, "Body", body)],
            figures: vec![],
        }
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn exact_title_rank_one() {
        let mut idx = Index::default();
        idx.index_paper(paper("p1", "Neural summarization of papers", "ACL", "Body text here.")).unwrap();
        let q = idx.text_processor().normalize("Neural summarization of papers");
        let r = idx.search(&q, &SearchFilter::default(), 10).unwrap();
        assert_eq!(r[0].paper_id, "p1");
        assert!(r[0].matched_fields.contains(&Field::Title));
    }

    #[test]
    fn venue_filter() {
        let mut idx = Index::default();
        idx.index_paper(paper("a", "One", "ACL", "Alpha.")).unwrap();
        idx.index_paper(paper("b", "Two", "NeurIPS", "Beta.")).unwrap();
        let f = SearchFilter { venue: Some("acl".into()), ..Default::default() };
        let r = idx.search(&[], &f, 10).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].paper_id, "a");
        assert_eq!(r[0].score, 0.0);
    }

    #[test]
    fn duplicate_id_and_empty_request() {
        let mut idx = Index::default();
        idx.index_paper(paper("a", "One", "", "x")).unwrap();
        assert_eq!(idx.index_paper(paper("a", "One", "", "x")), Err(IndexError::DuplicateId("a".into())));
        assert_eq!(idx.search(&[], &SearchFilter::default(), 5), Err(IndexError::EmptyRequest));
        assert!(idx.search(&toks("one"), &SearchFilter::default(), 0).unwrap().is_empty());
    }

    #[test]
    fn postings_sorted_by_paper_id() {
        let mut idx = Index::default();
        for id in ["m", "c", "x", "a"] {
            idx.index_paper(paper(id, "shared", "", "shared words")).unwrap();
        }
        let pl = idx.postings("shared").unwrap();
        let ids: Vec<(&str, Field)> = pl.postings.iter().map(|(p, f, _)| (*p, *f)).collect();
        assert_eq!(
            ids,
            vec![
                ("a", Field::Title), ("a", Field::Section),
                ("c", Field::Title), ("c", Field::Section),
                ("m", Field::Title), ("m", Field::Section),
                ("x", Field::Title), ("x", Field::Section),
            ]
        );
        assert_eq!(idx.doc_frequency("shared"), 4);
    }

    #[test]
    fn query_term_in_one_paper() {
        let mut idx = Index::default();
        idx.index_paper(paper("a", "Alpha", "", "Common words.")).unwrap();
        idx.index_paper(paper("b", "Beta", "", "Common words and zebra.")).unwrap();
        let r = idx.search(&toks("zebra"), &SearchFilter::default(), 10).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].paper_id, "b");
    }

    #[test]
    fn entity_facets() {
        let mut idx = Index::default();
        let key = EntityKey::new(EntityKind::Dataset, "SQuAD2.0");
        for id in ["a", "b"] {
            let mut p = paper(id, "T", "", "We use SQuAD2.0.");
            p.sections[0].mentions.push(crate::entities::EntityMention {
                entity: key.clone(),
                section_id: 0,
                sentence_id: 0,
                surface: "SQuAD2.0".into(),
                start: 7,
                end: 15,
            });
            idx.index_paper(p).unwrap();
        }
        assert_eq!(idx.facet_counts(&SearchFilter::default())[&key], 2);
        assert!(Index::default().facet_counts(&SearchFilter::default()).is_empty());
    }
}
