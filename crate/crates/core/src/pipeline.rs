//! Ingestion orchestration: parse, dedupe, segment and tag.

use std::collections::BTreeMap;
use std::io::BufRead;

use crate::entities::{EntityDictionary, EntityKind, EntityTagger};
use crate::ingest::{self, DedupeConfig, IngestError, PaperRecord};
use crate::textproc::TextProcessor;

#[derive(Debug, Clone, Default)]
pub struct Pipeline {
    pub text: TextProcessor,
    pub dictionary: EntityDictionary,
}

/// Summary of one ingestion run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IngestStats {
    pub papers_read: usize,
    pub duplicates_removed: usize,
    pub papers: usize,
    pub mentions_per_kind: BTreeMap<EntityKind, usize>,
    /// merged section count -> number of papers
    pub sections_histogram: BTreeMap<usize, usize>,
}

impl Pipeline {
    pub fn new(text: TextProcessor, dictionary: EntityDictionary) -> Self {
        Self { text, dictionary }
    }

    /// Segments every section into sentences without touching entity mentions.
    pub fn segment(&self, record: &mut PaperRecord) {
        for s in &mut record.sections {
            s.sentences = self.text.sentences(&s.text);
        }
    }

    /// Segments every section and tags it with `tagger`.
    pub fn prepare_with(&self, record: &mut PaperRecord, tagger: &dyn EntityTagger) {
        self.segment(record);
        for s in &mut record.sections {
            s.mentions = s.sentences.iter().flat_map(|u| tagger.tag(s.section_id, u)).collect();
        }
    }

    pub fn prepare(&self, record: &mut PaperRecord) {
        self.prepare_with(record, &self.dictionary);
    }

    /// Reads, dedupes and prepares a newline-delimited corpus.
    pub fn ingest(
        &self,
        reader: impl BufRead,
        dedupe: &DedupeConfig,
    ) -> Result<(Vec<PaperRecord>, IngestStats), IngestError> {
        let raw = ingest::read_corpus(reader)?;
        let papers_read = raw.len();
        let mut papers = ingest::dedupe(raw, dedupe);
        let mut stats = IngestStats {
            papers_read,
            duplicates_removed: papers_read - papers.len(),
            papers: papers.len(),
            mentions_per_kind: EntityKind::ALL.iter().map(|k| (*k, 0)).collect(),
            ..Default::default()
        };
        for p in &mut papers {
            self.prepare(p);
            *stats.sections_histogram.entry(p.sections.len()).or_default() += 1;
            for m in p.mentions() {
                *stats.mentions_per_kind.entry(m.entity.kind()).or_default() += 1;
            }
        }
        Ok((papers, stats))
    }
}
