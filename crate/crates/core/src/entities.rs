//! Dictionary-based Task / Dataset / Metric tagging.
//!
//! All aliases are lowercased into a character trie. Tagging is a single
//! left-to-right scan: at every position that starts on a word boundary the
//! trie is walked as far as the text allows and the longest alias that also
//! ends on a word boundary wins. The scan then resumes after the match, so
//! returned spans never overlap.
//!
//! A word boundary is any position that does not sit between two
//! alphanumeric characters. Aliases containing punctuation ("SQuAD2.0")
//! match literally.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textproc::SentenceUnit;

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("malformed dictionary{}: line {line}: {message}", .file.as_deref().map(|f| format!(" {f}")).unwrap_or_default())]
    Malformed {
        file: Option<String>,
        line: usize,
        message: String,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    Task,
    Dataset,
    Metric,
}

impl EntityKind {
    pub const ALL: [EntityKind; 3] = [EntityKind::Task, EntityKind::Dataset, EntityKind::Metric];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Task => "Task",
            EntityKind::Dataset => "Dataset",
            EntityKind::Metric => "Metric",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "task" => Ok(EntityKind::Task),
            "dataset" => Ok(EntityKind::Dataset),
            "metric" => Ok(EntityKind::Metric),
            other => Err(format!("unknown entity kind {other:?}")),
        }
    }
}

/// `(kind, canonical)` pair identifying an entity. Serializes as a
/// two-element array, e.g. `["Task", "machine translation"]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityKey(pub EntityKind, pub String);

impl EntityKey {
    pub fn new(kind: EntityKind, canonical: impl Into<String>) -> Self {
        Self(kind, canonical.into())
    }

    pub fn kind(&self) -> EntityKind {
        self.0
    }

    pub fn canonical(&self) -> &str {
        &self.1
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub kind: EntityKind,
    pub canonical: String,
    pub aliases: BTreeSet<String>,
}

impl Entity {
    pub fn key(&self) -> EntityKey {
        EntityKey::new(self.kind, self.canonical.clone())
    }
}

/// One tagged occurrence. `start..end` is the byte span within the
/// sentence's raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub entity: EntityKey,
    pub section_id: u32,
    pub sentence_id: u32,
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

/// A dictionary match inside a free-standing string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasMatch {
    pub entity: EntityKey,
    pub start: usize,
    pub end: usize,
}

/// Anything that can emit entity mentions for a sentence. The dictionary is
/// the built-in implementation; learned extractors plug in here.
pub trait EntityTagger {
    fn tag(&self, section_id: u32, sentence: &SentenceUnit) -> Vec<EntityMention>;
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: HashMap<char, u32>,
    terminal: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct EntityDictionary {
    entities: Vec<Entity>,
    nodes: Vec<TrieNode>,
}

impl Default for EntityDictionary {
    fn default() -> Self {
        Self::from_entities(Vec::new())
    }
}

impl PartialEq for EntityDictionary {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
    }
}

impl EntityDictionary {
    /// Builds the dictionary, merging entries that share `(kind, canonical)`
    /// and ensuring every canonical name is also an alias.
    pub fn from_entities(entities: impl IntoIterator<Item = Entity>) -> Self {
        let mut merged: BTreeMap<EntityKey, BTreeSet<String>> = BTreeMap::new();
        for e in entities {
            let aliases = merged.entry(e.key()).or_default();
            aliases.insert(e.canonical.clone());
            aliases.extend(e.aliases.into_iter().filter(|a| !a.trim().is_empty()));
        }
        let entities: Vec<Entity> = merged
            .into_iter()
            .map(|(EntityKey(kind, canonical), aliases)| Entity { kind, canonical, aliases })
            .collect();

        let mut nodes = vec![TrieNode::default()];
        for (idx, e) in entities.iter().enumerate() {
            for alias in &e.aliases {
                let mut cur = 0usize;
                for c in alias.chars().flat_map(char::to_lowercase) {
                    let next = nodes.len() as u32;
                    let child = *nodes[cur].children.entry(c).or_insert(next);
                    if child == next {
                        nodes.push(TrieNode::default());
                    }
                    cur = child as usize;
                }
                // An alias shared by two entities resolves to the first in
                // (kind, canonical) order.
                nodes[cur].terminal.get_or_insert(idx as u32);
            }
        }
        Self { entities, nodes }
    }

    pub fn parse(text: &str) -> Result<Self, DictionaryError> {
        Self::parse_named(text, None)
    }

    fn parse_named(text: &str, file: Option<&str>) -> Result<Self, DictionaryError> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if let Some(e) = parse_line(line).map_err(|message| DictionaryError::Malformed {
                file: file.map(str::to_owned),
                line: i + 1,
                message,
            })? {
                out.push(e);
            }
        }
        Ok(Self::from_entities(out))
    }

    /// Loads and merges several dictionary files.
    pub fn load<P: AsRef<Path>>(paths: &[P]) -> Result<Self, DictionaryError> {
        let mut all = Vec::new();
        for p in paths {
            let p = p.as_ref();
            let text = fs::read_to_string(p)
                .map_err(|source| DictionaryError::Io { path: p.display().to_string(), source })?;
            let d = Self::parse_named(&text, Some(&p.display().to_string()))?;
            all.extend(d.entities);
        }
        Ok(Self::from_entities(all))
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<EntityKind, usize> {
        let mut counts: BTreeMap<EntityKind, usize> = EntityKind::ALL.iter().map(|k| (*k, 0)).collect();
        for e in &self.entities {
            *counts.entry(e.kind).or_default() += 1;
        }
        counts
    }

    pub fn get(&self, key: &EntityKey) -> Option<&Entity> {
        self.entities
            .binary_search_by(|e| (e.kind, e.canonical.as_str()).cmp(&(key.0, key.1.as_str())))
            .ok()
            .map(|i| &self.entities[i])
    }

    /// The dictionary in its TSV file format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entities {
            let aliases: Vec<&str> = e.aliases.iter().map(String::as_str).collect();
            out.push_str(&format!("{}\t{}\t{}\n", e.kind, e.canonical, aliases.join("|")));
        }
        out
    }

    /// Longest-match scan over `text`; see the module docs.
    pub fn find(&self, text: &str) -> Vec<AliasMatch> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let alnum = |i: usize| chars.get(i).is_some_and(|(_, c)| c.is_alphanumeric());
        let boundary = |i: usize| i == 0 || i >= chars.len() || !(alnum(i - 1) && alnum(i));
        let byte_at = |i: usize| chars.get(i).map_or(text.len(), |(b, _)| *b);

        let mut out = Vec::new();
        let mut s = 0;
        while s < chars.len() {
            let mut best: Option<(usize, u32)> = None;
            if boundary(s) {
                let mut node = 0usize;
                'walk: for (k, &(_, c)) in chars.iter().enumerate().skip(s) {
                    for lc in c.to_lowercase() {
                        match self.nodes[node].children.get(&lc) {
                            Some(&n) => node = n as usize,
                            None => break 'walk,
                        }
                    }
                    if let Some(ent) = self.nodes[node].terminal {
                        if boundary(k + 1) {
                            best = Some((k + 1, ent));
                        }
                    }
                }
            }
            match best {
                Some((e, ent)) => {
                    out.push(AliasMatch {
                        entity: self.entities[ent as usize].key(),
                        start: byte_at(s),
                        end: byte_at(e),
                    });
                    s = e;
                }
                None => s += 1,
            }
        }
        out
    }

    /// Distinct entities mentioned anywhere in `text`.
    pub fn entities_in(&self, text: &str) -> BTreeSet<EntityKey> {
        self.find(text).into_iter().map(|m| m.entity).collect()
    }
}

impl EntityTagger for EntityDictionary {
    fn tag(&self, section_id: u32, sentence: &SentenceUnit) -> Vec<EntityMention> {
        self.find(&sentence.raw)
            .into_iter()
            .map(|m| EntityMention {
                surface: sentence.raw[m.start..m.end].to_owned(),
                entity: m.entity,
                section_id,
                sentence_id: sentence.id,
                start: m.start,
                end: m.end,
            })
            .collect()
    }
}

fn parse_line(line: &str) -> Result<Option<Entity>, String> {
    let trimmed = line.trim_end_matches(['\r', '\n']);
    if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
        return Ok(None);
    }
    let mut cols = trimmed.split('\t');
    let kind: EntityKind = cols.next().unwrap_or("").parse()?;
    let canonical = cols.next().map(str::trim).unwrap_or("");
    if canonical.is_empty() {
        return Err("missing canonical name".into());
    }
    let aliases: BTreeSet<String> = cols
        .next()
        .unwrap_or("")
        .split('|')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(str::to_owned)
        .collect();
    if cols.next().is_some() {
        return Err("expected at most 3 tab-separated columns".into());
    }
    Ok(Some(Entity { kind, canonical: canonical.to_owned(), aliases }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::Stopwords;
    use proptest::prelude::*;

    fn dict(tsv: &str) -> EntityDictionary {
        EntityDictionary::parse(tsv).unwrap()
    }

    fn sentence(raw: &str) -> SentenceUnit {
        SentenceUnit::new(0, raw, &Stopwords::english())
    }

    #[test]
    fn counts_per_kind() {
        let d = dict("Task\tqa\tquestion answering\nTask\tmt\nTask\tner\n");
        let c = d.counts();
        assert_eq!(c[&EntityKind::Task], 3);
        assert_eq!(c[&EntityKind::Dataset], 0);
        assert_eq!(c[&EntityKind::Metric], 0);
    }

    #[test]
    fn duplicate_canonical_merges_aliases() {
        let d = dict("Dataset\tSQuAD\tSQuAD1.1\n# comment\nDataset\tSQuAD\tSQuAD v1\n");
        assert_eq!(d.len(), 1);
        let aliases = &d.entities()[0].aliases;
        assert!(aliases.contains("SQuAD") && aliases.contains("SQuAD1.1") && aliases.contains("SQuAD v1"));
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = EntityDictionary::parse("Task\tqa\n\nWidget\tx\n").unwrap_err();
        assert!(matches!(err, DictionaryError::Malformed { line: 3, .. }));
        let err = EntityDictionary::parse("Task\t\n").unwrap_err();
        assert!(matches!(err, DictionaryError::Malformed { line: 1, .. }));
    }

    #[test]
    fn tag_examples() {
        let d = dict("Dataset\tSQuAD2.0\tSQuAD2.0\n");
        let m = d.tag(0, &sentence("We evaluate on SQuAD2.0"));
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].entity.kind(), EntityKind::Dataset);
        assert_eq!(m[0].surface, "SQuAD2.0");

        let d = dict("Task\tquestion answering\tquestion answering|question answering systems\n");
        let m = d.tag(0, &sentence("question answering systems"));
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "question answering systems");

        let d = dict("Dataset\tSQuAD\n");
        assert!(d.tag(0, &sentence("squadron")).is_empty());
    }

    #[test]
    fn shorter_alias_survives_failed_longer_boundary() {
        let d = dict("Task\tnew york\tnew york|new york city\n");
        let m = d.find("new york cityscape");
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].start, m[0].end), (0, 8));
    }

    #[test]
    fn tsv_round_trip() {
        let d = dict("Metric\tF1\tF1|F1 score\nTask\tqa\tquestion answering\n");
        assert_eq!(dict(&d.to_tsv()), d);
    }

    fn test_dict() -> EntityDictionary {
        dict("Task\tqa\tqa|question answering|question answering systems\nDataset\tSQuAD\tsquad|squad2\nMetric\tF1\tf1|f1 score\n")
    }

    proptest! {
        #[test]
        fn spans_disjoint_and_surfaces_are_aliases(words in prop::collection::vec(
            prop::sample::select(vec!["qa", "question", "answering", "systems", "squad", "squad2", "f1", "score", "x", "SQuAD", "F1"]), 0..20)) {
            let d = test_dict();
            let text = words.join(" ");
            let ms = d.find(&text);
            for w in ms.windows(2) {
                prop_assert!(w[0].end <= w[1].start);
            }
            for m in &ms {
                let surface = text[m.start..m.end].to_lowercase();
                let e = d.get(&m.entity).unwrap();
                prop_assert!(e.aliases.iter().any(|a| a.to_lowercase() == surface));
            }
        }

        #[test]
        fn case_invariant(s in "[a-zA-Z0-9 .]{0,40}") {
            let d = test_dict();
            let key = |v: Vec<AliasMatch>| v.into_iter().map(|m| (m.entity, m.start, m.end)).collect::<Vec<_>>();
            prop_assert_eq!(key(d.find(&s)), key(d.find(&s.to_uppercase())));
            prop_assert_eq!(key(d.find(&s)), key(d.find(&s.to_lowercase())));
        }
    }
}
