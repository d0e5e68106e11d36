//! Text normalization: sentence segmentation, tokenization, stopword removal
//! and n-gram bags.
//!
//! Everything here is a pure function of its input. Bigrams are formed over
//! the stopword-filtered token sequence, so "results of the model" yields the
//! single bigram `"results model"`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

const ENGLISH_STOPWORDS: &str = include_str!("../assets/stopwords.txt");

/// Lowercase words that end with a period without ending a sentence.
const ABBREVIATIONS: &[&str] = &[
    "fig.", "figs.", "eq.", "eqs.", "tab.", "sec.", "secs.", "no.", "nos.", "vs.", "e.g.",
    "i.e.", "al.", "cf.", "resp.", "approx.", "ref.", "refs.", "dr.", "prof.", "mr.", "mrs.",
    "ms.", "vol.", "pp.",
];

/// Characters that may trail terminal punctuation and still belong to the sentence.
const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}', '\u{bb}'];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self(HashSet::new())
    }

    /// Parses one word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All words in sorted order.
    pub fn words(&self) -> Vec<&str> {
        let mut w: Vec<&str> = self.0.iter().map(String::as_str).collect();
        w.sort_unstable();
        w
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Relative-frequency bag of n-grams. Keys are the n tokens joined by a space.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NGramBag {
    pub entries: BTreeMap<String, f64>,
}

impl NGramBag {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, gram: &str) -> f64 {
        self.entries.get(gram).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }
}

/// Counts every n-gram of `tokens` and divides by the number of n-grams.
/// Fewer than `n` tokens gives an empty bag.
pub fn bag_of_ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> NGramBag {
    assert!(n >= 1, "n-gram order must be at least 1");
    if tokens.len() < n {
        return NGramBag::default();
    }
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    let windows = tokens.len() - n + 1;
    for w in tokens.windows(n) {
        let key = w.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
        *counts.entry(key).or_insert(0.0) += 1.0;
    }
    let total = windows as f64;
    for v in counts.values_mut() {
        *v /= total;
    }
    NGramBag { entries: counts }
}

/// Lowercased maximal alphanumeric runs. Hyphens, apostrophes and every other
/// non-alphanumeric character separate tokens. Uppercase characters without a
/// lowercase form are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.chars().flat_map(char::to_lowercase).filter(|c| c.is_alphanumeric() && !c.is_uppercase()).collect::<String>())
        .filter(|s| !s.is_empty())
        .collect()
}

/// [`tokenize`] with stopwords removed, original order kept.
pub fn normalize(raw: &str, stopwords: &Stopwords) -> Vec<String> {
    tokenize(raw).into_iter().filter(|t| !stopwords.contains(t)).collect()
}

fn paragraph_break() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\n[ \t\r]*\n\s*").expect("valid regex"))
}

/// Splits `text` into trimmed sentence slices.
///
/// Blank lines always end a sentence. Otherwise a sentence ends after a run
/// of `.`, `!` or `?` (plus closing quotes or brackets) that is followed by
/// whitespace and a character that is not a lowercase letter, unless the
/// word carrying the period is a guarded abbreviation or a single-letter
/// initial.
pub fn segment_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut para_start = 0;
    for m in paragraph_break().find_iter(text) {
        split_paragraph(text, para_start, m.start(), &mut out);
        para_start = m.end();
    }
    split_paragraph(text, para_start, text.len(), &mut out);
    out
}

fn split_paragraph<'a>(text: &'a str, from: usize, to: usize, out: &mut Vec<&'a str>) {
    let para = &text[from..to];
    let mut start = 0;
    let mut iter = para.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, nc)) = iter.peek() {
            if matches!(nc, '.' | '!' | '?') || CLOSERS.contains(&nc) {
                end = j + nc.len_utf8();
                iter.next();
            } else {
                break;
            }
        }
        let rest = &para[end..];
        if !rest.is_empty() {
            if !rest.starts_with(char::is_whitespace) {
                continue;
            }
            match rest.trim_start().chars().next() {
                None => {}
                Some(nc) if nc.is_lowercase() => continue,
                Some(_) => {}
            }
        }
        if c == '.' && end == i + 1 && is_guarded(&para[start..end]) {
            continue;
        }
        push_trimmed(&para[start..end], out);
        start = end;
    }
    push_trimmed(&para[start..], out);
}

fn is_guarded(sentence_so_far: &str) -> bool {
    let word = sentence_so_far
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric());
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    let mut chars = word.chars();
    matches!((chars.next(), chars.next(), chars.next()), (Some(a), Some('.'), None) if a.is_uppercase())
}

fn push_trimmed<'a>(s: &'a str, out: &mut Vec<&'a str>) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t);
    }
}

/// One sentence of a section together with its normalized representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceUnit {
    pub id: u32,
    pub raw: String,
    pub tokens: Vec<String>,
    pub unigrams: NGramBag,
    pub bigrams: NGramBag,
    pub token_count: usize,
}

impl SentenceUnit {
    pub fn new(id: u32, raw: &str, stopwords: &Stopwords) -> Self {
        let tokens = normalize(raw, stopwords);
        Self {
            id,
            raw: raw.to_owned(),
            unigrams: bag_of_ngrams(&tokens, 1),
            bigrams: bag_of_ngrams(&tokens, 2),
            token_count: tokens.len(),
            tokens,
        }
    }
}

/// Shared text pipeline configured with a stopword list.
#[derive(Debug, Clone)]
pub struct TextProcessor {
    stopwords: Stopwords,
}

impl Default for TextProcessor {
    fn default() -> Self {
        Self::new(Stopwords::english())
    }
}

impl TextProcessor {
    pub fn new(stopwords: Stopwords) -> Self {
        Self { stopwords }
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn normalize(&self, raw: &str) -> Vec<String> {
        normalize(raw, &self.stopwords)
    }

    /// Segments `text` and builds one [`SentenceUnit`] per sentence, numbered
    /// from zero in document order.
    pub fn sentences(&self, text: &str) -> Vec<SentenceUnit> {
        segment_sentences(text)
            .into_iter()
            .enumerate()
            .map(|(i, s)| SentenceUnit::new(i as u32, s, &self.stopwords))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sw(words: &[&str]) -> Stopwords {
        words.iter().copied().collect()
    }

    #[test]
    fn segment_examples() {
        assert!(segment_sentences("").is_empty());
        assert_eq!(
            segment_sentences("We train a model. It works well."),
            vec!["We train a model.", "It works well."]
        );
        assert_eq!(segment_sentences("See Fig. 3 for results. We conclude.").len(), 2);
    }

    #[test]
    fn segment_guards() {
        assert_eq!(segment_sentences("Smith et al. Proposed it. Done.").len(), 2);
        assert_eq!(segment_sentences("Accuracy is 3.5 points higher. Good!").len(), 2);
        assert_eq!(segment_sentences("Models, e.g. BERT, help. Yes.").len(), 2);
        assert_eq!(segment_sentences("J. Smith wrote it. Then stopped.").len(), 2);
        assert_eq!(segment_sentences("Is it? \"Yes.\" Fine.").len(), 3);
        assert_eq!(segment_sentences("Intro\n\nWe begin here."), vec!["Intro", "We begin here."]);
        assert_eq!(segment_sentences("Lower case. continues here."), vec!["Lower case. continues here."]);
    }

    #[test]
    fn hand_labeled_fixture() {
        let labeled = include_str!("../tests/fixtures/sentences.txt");
        let expected: Vec<&str> = labeled.lines().filter(|l| !l.trim().is_empty()).collect();
        assert_eq!(expected.len(), 50);
        let text = expected.join(" ");
        assert_eq!(segment_sentences(&text), expected);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("The cat sat", &sw(&["the"])), vec!["cat", "sat"]);
        assert_eq!(normalize("BERT improves F1", &Stopwords::empty()), vec!["bert", "improves", "f1"]);
        assert!(normalize("", &Stopwords::english()).is_empty());
        assert_eq!(
            normalize("state-of-the-art", &Stopwords::english()),
            vec!["state", "art"]
        );
    }

    #[test]
    fn bag_examples() {
        let b = bag_of_ngrams(&["cat", "sat"], 1);
        assert_eq!(b.get("cat"), 0.5);
        assert_eq!(b.get("sat"), 0.5);
        let b = bag_of_ngrams(&["cat", "sat"], 2);
        assert_eq!(b.entries.len(), 1);
        assert_eq!(b.get("cat sat"), 1.0);
        let b = bag_of_ngrams(&["a", "a", "b"], 1);
        assert!((b.get("a") - 2.0 / 3.0).abs() < 1e-12);
        assert!((b.get("b") - 1.0 / 3.0).abs() < 1e-12);
        assert!(bag_of_ngrams(&["a"], 2).is_empty());
    }

    #[test]
    fn stopword_file_format() {
        let s = Stopwords::parse("# comment\nThe\n\n  of \n");
        assert_eq!(s.len(), 2);
        assert!(s.contains("the") && s.contains("of"));
        assert!(Stopwords::english().len() > 170);
    }

    #[test]
    fn sentence_unit_fields() {
        let s = SentenceUnit::new(0, "The results of the model improve.", &Stopwords::english());
        assert_eq!(s.tokens, vec!["results", "model", "improve"]);
        assert_eq!(s.token_count, 3);
        assert_eq!(s.bigrams.len(), 2);
    }

    proptest! {
        #[test]
        fn bag_sums_to_one(tokens in prop::collection::vec("[a-e]{1,3}", 0..40), n in 1usize..3) {
            let bag = bag_of_ngrams(&tokens, n);
            if tokens.len() < n {
                prop_assert!(bag.is_empty());
            } else {
                prop_assert!((bag.total() - 1.0).abs() < 1e-9);
                for k in bag.entries.keys() {
                    prop_assert_eq!(k.split(' ').count(), n);
                }
            }
        }

        #[test]
        fn normalize_idempotent(s in "\\PC{0,80}") {
            let stop = Stopwords::english();
            let once = normalize(&s, &stop);
            let twice = normalize(&once.join(" "), &stop);
            prop_assert_eq!(&once, &twice);
            for t in &once {
                prop_assert!(!stop.contains(t));
                prop_assert!(!t.chars().any(char::is_uppercase));
            }
        }

        #[test]
        fn segmentation_covers_text(s in "([A-Za-z]{1,6}[ .!?\n]{1,2}){0,20}") {
            let sents = segment_sentences(&s);
            for x in &sents {
                prop_assert!(!x.is_empty());
            }
            let strip = |x: &str| x.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            prop_assert_eq!(strip(&sents.concat()), strip(&s));
        }

        #[test]
        fn token_count_matches_unigrams(s in "[A-Za-z ,.]{0,60}") {
            let u = SentenceUnit::new(0, &s, &Stopwords::english());
            prop_assert_eq!(u.token_count, u.tokens.len());
            if u.token_count > 0 {
                let counted: f64 = u.unigrams.entries.values().map(|f| f * u.token_count as f64).sum();
                prop_assert!((counted - u.token_count as f64).abs() < 1e-9);
            }
        }
    }
}
