//! Core engine for searching and summarizing scientific papers.
//!
//! The pipeline runs in a fixed order:
//!
//! 1. [`ingest`] parses structured paper records, merges subsections and
//!    removes cross-source duplicates.
//! 2. [`textproc`] segments sections into sentences and builds the unigram and
//!    bigram bags every later stage consumes.
//! 3. [`entities`] tags Task / Dataset / Metric mentions from curated
//!    dictionaries.
//! 4. [`index`] holds the in-memory inverted index with metadata and entity
//!    facets.
//! 5. [`query`] turns an information need into a weighted [`query::QueryProfile`].
//! 6. [`summarizer`] selects a sentence subset per section with the
//!    cross-entropy method.
//! 7. [`evalharness`] compares section-based against section-agnostic summaries.

pub mod config;
pub mod entities;
pub mod evalharness;
pub mod index;
pub mod ingest;
pub mod pipeline;
pub mod query;
pub mod snapshot;
pub mod summarizer;
pub mod synth;
pub mod textproc;

pub use config::Config;
pub use entities::{Entity, EntityDictionary, EntityKey, EntityKind, EntityMention};
pub use index::{Index, SearchFilter, SearchResult};
pub use ingest::{PaperRecord, SectionDoc, Source};
pub use query::{ProfileOrigin, QueryProfile};
pub use summarizer::{CeConfig, ObjectiveBreakdown, PaperSummary, SectionSummary};
pub use textproc::{NGramBag, SentenceUnit, TextProcessor};
