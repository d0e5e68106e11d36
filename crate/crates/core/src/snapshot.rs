//! Line-oriented index snapshots.
//!
//! ```text
//! {"format":"scisumm-index","version":1,"papers":2,"terms":57,"bm25":{..}}
//! S ["a","about",..]                      stopwords
//! D [{"kind":"Task",..},..]               entity dictionary
//! P {"record":{..},"field_lens":[..],"entities":[..]}   one per paper
//! T ["term",[[doc,"title",tf],..]]        one per term, sorted by term
//! ```
//!
//! Sentences are not stored; they are re-segmented on load with the saved
//! stopword list, which reproduces them exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entities::{Entity, EntityDictionary, EntityKey};
use crate::index::{Bm25Config, DocEntry, Field, Index, Posting};
use crate::ingest::PaperRecord;
use crate::textproc::{Stopwords, TextProcessor};

pub const FORMAT: &str = "scisumm-index";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("snapshot line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unsupported snapshot version {0}")]
    Version(u32),
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    papers: usize,
    terms: usize,
    bm25: Bm25Config,
}

#[derive(Serialize)]
struct DocOut<'a> {
    record: &'a PaperRecord,
    field_lens: [u32; 3],
    entities: &'a BTreeSet<EntityKey>,
}

#[derive(Deserialize)]
struct DocIn {
    record: PaperRecord,
    field_lens: [u32; 3],
    entities: BTreeSet<EntityKey>,
}

/// A frozen index plus the dictionary that tagged it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshot {
    pub index: Index,
    pub dictionary: EntityDictionary,
}

impl Snapshot {
    pub fn new(index: Index, dictionary: EntityDictionary) -> Self {
        Self { index, dictionary }
    }

    pub fn write_to(&self, out: impl Write) -> Result<(), SnapshotError> {
        let mut out = BufWriter::new(out);
        let (docs, postings) = self.index.raw_parts();
        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
            papers: docs.len(),
            terms: postings.len(),
            bm25: *self.index.config(),
        };
        writeln!(out, "{}", json(&header))?;
        writeln!(out, "S {}", json(&self.index.text_processor().stopwords().words()))?;
        writeln!(out, "D {}", json(&self.dictionary.entities()))?;
        for d in docs {
            writeln!(out, "P {}", json(&DocOut { record: &d.record, field_lens: d.field_lens, entities: &d.entities }))?;
        }
        for (term, list) in postings {
            let rows: Vec<(u32, Field, u32)> = list.iter().map(|p| (p.doc, p.field, p.tf)).collect();
            writeln!(out, "T {}", json(&(term, rows)))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes to a sibling temp file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<(), SnapshotError> {
        let tmp = path.with_extension("tmp");
        self.write_to(fs::File::create(&tmp)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Self, SnapshotError> {
        let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, first) = lines.next().ok_or(SnapshotError::Format { line: 1, message: "empty snapshot".into() })?;
        let header: Header = parse(1, &first?)?;
        if header.format != FORMAT {
            return Err(SnapshotError::Format { line: 1, message: format!("not an index snapshot: {}", header.format) });
        }
        if header.version != VERSION {
            return Err(SnapshotError::Version(header.version));
        }

        let mut stopwords = None;
        let mut entities: Option<Vec<Entity>> = None;
        let mut docs_in: Vec<DocIn> = Vec::with_capacity(header.papers);
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        for (n, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (tag, body) = line.split_once(' ').unwrap_or((line.as_str(), ""));
            match tag {
                "S" => stopwords = Some(parse::<Vec<String>>(n, body)?.into_iter().collect::<Stopwords>()),
                "D" => entities = Some(parse(n, body)?),
                "P" => docs_in.push(parse(n, body)?),
                "T" => {
                    let (term, rows): (String, Vec<(u32, Field, u32)>) = parse(n, body)?;
                    if rows.iter().any(|r| r.0 as usize >= header.papers) {
                        return Err(SnapshotError::Format { line: n, message: format!("posting for unknown paper in {term:?}") });
                    }
                    postings.insert(term, rows.into_iter().map(|(doc, field, tf)| Posting { doc, field, tf }).collect());
                }
                other => return Err(SnapshotError::Format { line: n, message: format!("unknown record tag {other:?}") }),
            }
        }
        if docs_in.len() != header.papers || postings.len() != header.terms {
            return Err(SnapshotError::Format {
                line: 1,
                message: format!(
                    "header promises {} papers / {} terms, found {} / {}",
                    header.papers,
                    header.terms,
                    docs_in.len(),
                    postings.len()
                ),
            });
        }

        let text = TextProcessor::new(stopwords.unwrap_or_else(Stopwords::empty));
        let mut term_counts: Vec<BTreeMap<String, u32>> = vec![BTreeMap::new(); docs_in.len()];
        for (term, list) in &postings {
            for p in list {
                *term_counts[p.doc as usize].entry(term.clone()).or_default() += p.tf;
            }
        }
        let docs = docs_in
            .into_iter()
            .zip(term_counts)
            .map(|(d, term_counts)| {
                let mut record = d.record;
                for s in &mut record.sections {
                    s.sentences = text.sentences(&s.text);
                }
                DocEntry { record, field_lens: d.field_lens, term_counts, entities: d.entities }
            })
            .collect();
        Ok(Self {
            index: Index::from_raw_parts(header.bm25, text, docs, postings),
            dictionary: EntityDictionary::from_entities(entities.unwrap_or_default()),
        })
    }

    pub fn load(path: &Path) -> Result<Self, SnapshotError> {
        Self::read_from(BufReader::new(fs::File::open(path)?))
    }
}

fn json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("snapshot values serialize")
}

fn parse<T: for<'de> Deserialize<'de>>(line: usize, body: &str) -> Result<T, SnapshotError> {
    serde_json::from_str(body).map_err(|e| SnapshotError::Format { line, message: e.to_string() })
}
