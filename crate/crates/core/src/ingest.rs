//! Structured paper records: parsing, subsection merging, figure/table
//! reference detection and cross-source deduplication.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::BufRead;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::entities::EntityMention;
use crate::textproc::{tokenize, SentenceUnit};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed record{}: {path}: {message}", line_suffix(*.line))]
    MalformedRecord {
        line: Option<usize>,
        path: String,
        message: String,
    },
    #[error("empty paper{}: record has neither a title nor sections", line_suffix(*.line))]
    EmptyPaper { line: Option<usize> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

impl IngestError {
    fn at_line(self, n: usize) -> Self {
        match self {
            IngestError::MalformedRecord { path, message, .. } => {
                IngestError::MalformedRecord { line: Some(n), path, message }
            }
            IngestError::EmptyPaper { .. } => IngestError::EmptyPaper { line: Some(n) },
            other => other,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            IngestError::MalformedRecord { line, .. } | IngestError::EmptyPaper { line } => *line,
            IngestError::Io(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Arxiv,
    Acl,
    #[default]
    Other,
}

impl Source {
    /// Lower ranks win when duplicates are collapsed.
    fn preference(self) -> u8 {
        match self {
            Source::Acl => 0,
            Source::Arxiv => 1,
            Source::Other => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Figure {
    pub ref_id: String,
    #[serde(default)]
    pub caption: String,
}

/// A figure or table reference found in section text. `position` is the byte
/// offset of the reference keyword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefMention {
    pub position: usize,
    pub ref_id: String,
}

/// A section as it appears in an input record, before merging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSection {
    #[serde(default)]
    pub title: String,
    #[serde(default = "top_level")]
    pub depth: i64,
    #[serde(default)]
    pub text: String,
}

fn top_level() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionDoc {
    pub section_id: u32,
    pub title: String,
    pub text: String,
    /// Filled by [`crate::pipeline::Pipeline::prepare`]; never serialized.
    #[serde(skip)]
    pub sentences: Vec<SentenceUnit>,
    #[serde(default)]
    pub ref_mentions: Vec<RefMention>,
    #[serde(default)]
    pub mentions: Vec<EntityMention>,
}

impl SectionDoc {
    pub fn new(section_id: u32, title: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            section_id,
            title: title.into(),
            text: text.into(),
            sentences: Vec::new(),
            ref_mentions: Vec::new(),
            mentions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub authors: Vec<String>,
    pub venue: String,
    pub year: i64,
    pub source: Source,
    pub sections: Vec<SectionDoc>,
    pub figures: Vec<Figure>,
}

impl PaperRecord {
    pub fn mentions(&self) -> impl Iterator<Item = &EntityMention> {
        self.sections.iter().flat_map(|s| s.mentions.iter())
    }

    pub fn sentence_count(&self) -> usize {
        self.sections.iter().map(|s| s.sentences.len()).sum()
    }

    /// The record in input-schema form. Sections are emitted at depth 1, so
    /// re-parsing the output yields an equal record.
    pub fn to_input_json(&self) -> serde_json::Value {
        json!({
            "id": self.paper_id,
            "title": self.title,
            "abstract": self.abstract_text,
            "authors": self.authors,
            "venue": self.venue,
            "year": self.year,
            "source": self.source,
            "sections": self.sections.iter().map(|s| json!({
                "title": s.title, "depth": 1, "text": s.text
            })).collect::<Vec<_>>(),
            "figures": self.figures,
        })
    }
}

#[derive(Deserialize)]
struct InputRecord {
    id: String,
    title: Option<String>,
    #[serde(rename = "abstract", default)]
    abstract_text: String,
    #[serde(default)]
    authors: Vec<String>,
    #[serde(default)]
    venue: String,
    #[serde(default)]
    year: i64,
    #[serde(default)]
    source: Source,
    #[serde(default)]
    sections: Vec<RawSection>,
    #[serde(default)]
    figures: Vec<Figure>,
}

/// Parses one record in the paper input schema.
pub fn parse_paper(bytes: &[u8]) -> Result<PaperRecord, IngestError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let input: InputRecord = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        IngestError::MalformedRecord { line: None, path, message: e.inner().to_string() }
    })?;

    let title = input.title.as_deref().map(str::trim).unwrap_or("");
    if title.is_empty() && input.sections.is_empty() {
        return Err(IngestError::EmptyPaper { line: None });
    }
    if input.title.is_none() {
        return Err(IngestError::MalformedRecord {
            line: None,
            path: "title".into(),
            message: "missing field `title`".into(),
        });
    }

    let mut sections = merge_subsections(&input.sections);
    if sections.is_empty() {
        if !input.abstract_text.trim().is_empty() {
            sections.push(SectionDoc::new(0, "Abstract", input.abstract_text.clone()));
        } else {
            sections.push(SectionDoc::new(0, "Title", title));
        }
    }
    for s in &mut sections {
        s.ref_mentions = detect_refs(&s.text);
    }

    Ok(PaperRecord {
        paper_id: input.id,
        title: input.title.unwrap_or_default(),
        abstract_text: input.abstract_text,
        authors: input.authors,
        venue: input.venue,
        year: input.year,
        source: input.source,
        sections,
        figures: input.figures,
    })
}

/// Reads newline-delimited records. Blank lines are skipped; errors carry
/// the 1-based line number.
pub fn read_corpus(reader: impl BufRead) -> Result<Vec<PaperRecord>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_paper(line.as_bytes()).map_err(|e| e.at_line(i + 1))?);
    }
    Ok(out)
}

/// Separator placed between a parent's text and each merged child piece.
pub const MERGE_SEPARATOR: &str = "\n\n";

/// Folds every section of depth > 1 into the nearest preceding top-level
/// section as `"\n\n" + title + "\n\n" + text`. A subsection with no
/// preceding top-level section becomes a top-level section itself.
pub fn merge_subsections(raw: &[RawSection]) -> Vec<SectionDoc> {
    let mut out: Vec<SectionDoc> = Vec::new();
    for r in raw {
        match out.last_mut() {
            Some(parent) if r.depth > 1 => {
                parent.text.push_str(MERGE_SEPARATOR);
                parent.text.push_str(&r.title);
                parent.text.push_str(MERGE_SEPARATOR);
                parent.text.push_str(&r.text);
            }
            _ => out.push(SectionDoc::new(out.len() as u32, r.title.clone(), r.text.clone())),
        }
    }
    out
}

fn ref_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)\b(figures?|figs?|tables?|tab)(?:\.\s*|\s+)(\d+[a-z]?\b(?:\s*(?:,\s*and|,|and|&)\s*\d+[a-z]?\b)*)",
        )
        .expect("valid regex")
    })
}

fn number_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+").expect("valid regex"))
}

/// Finds `Figure`/`Fig.`/`Table`/`Tab.` references (and plural list forms
/// such as "Tables 1 and 2") and normalizes them to `figure-N` / `table-N`.
pub fn detect_refs(text: &str) -> Vec<RefMention> {
    let mut out = Vec::new();
    for caps in ref_pattern().captures_iter(text) {
        let keyword = caps.get(1).expect("group 1");
        let kind = if keyword.as_str().to_ascii_lowercase().starts_with('f') { "figure" } else { "table" };
        let numbers = caps.get(2).expect("group 2").as_str();
        for n in number_pattern().find_iter(numbers) {
            let n = n.as_str().trim_start_matches('0');
            let n = if n.is_empty() { "0" } else { n };
            out.push(RefMention { position: keyword.start(), ref_id: format!("{kind}-{n}") });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupeConfig {
    pub title_threshold: f64,
    pub author_threshold: f64,
}

impl Default for DedupeConfig {
    fn default() -> Self {
        Self { title_threshold: 0.9, author_threshold: 0.5 }
    }
}

/// |A ∩ B| / |A ∪ B|, with two empty sets counting as identical.
pub fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

pub fn title_token_set(title: &str) -> HashSet<String> {
    tokenize(title).into_iter().collect()
}

pub fn author_set(authors: &[String]) -> HashSet<String> {
    authors
        .iter()
        .map(|a| tokenize(a).join(" "))
        .filter(|a| !a.is_empty())
        .collect()
}

pub fn is_duplicate(a: &PaperRecord, b: &PaperRecord, cfg: &DedupeConfig) -> bool {
    jaccard(&title_token_set(&a.title), &title_token_set(&b.title)) >= cfg.title_threshold
        && jaccard(&author_set(&a.authors), &author_set(&b.authors)) >= cfg.author_threshold
}

fn preference_order(a: &PaperRecord, b: &PaperRecord) -> Ordering {
    a.source
        .preference()
        .cmp(&b.source.preference())
        .then_with(|| a.paper_id.cmp(&b.paper_id))
}

/// Removes cross-source duplicates.
///
/// Records are visited in preference order (ACL, then arXiv, then other;
/// ties by ascending `paper_id`) and a record is kept unless it duplicates an
/// already-kept one. Survivors keep their original relative order, so the
/// result does not depend on how the input was shuffled beyond that order.
pub fn dedupe(corpus: Vec<PaperRecord>, cfg: &DedupeConfig) -> Vec<PaperRecord> {
    struct Key {
        titles: HashSet<String>,
        authors: HashSet<String>,
    }
    let keys: Vec<Key> = corpus
        .iter()
        .map(|p| Key { titles: title_token_set(&p.title), authors: author_set(&p.authors) })
        .collect();

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by(|&i, &j| preference_order(&corpus[i], &corpus[j]).then(i.cmp(&j)));

    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let dup = kept.iter().any(|&k| {
            jaccard(&keys[i].titles, &keys[k].titles) >= cfg.title_threshold
                && jaccard(&keys[i].authors, &keys[k].authors) >= cfg.author_threshold
        });
        if !dup {
            kept.push(i);
        }
    }
    let keep: HashSet<usize> = kept.into_iter().collect();
    corpus
        .into_iter()
        .enumerate()
        .filter_map(|(i, p)| keep.contains(&i).then_some(p))
        .collect()
}
