//! Section-based versus section-agnostic summaries, compared on objective
//! metrics.
//!
//! For each paper the section-based summary is built first; the flat
//! summary then gets exactly as many sentences, chosen from the pooled
//! paper. Three metrics are compared per paper:
//!
//! * text coverage: mean over summarized sections of the section summary's
//!   bigram cosine with its section, against the flat summary's cosine with
//!   the whole paper;
//! * query saliency and diversity of the pooled summary text.

use std::fmt::{self, Write as _};
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::PaperRecord;
use crate::query::QueryProfile;
use crate::summarizer::{self, pool_sections, summarize_flat, summarize_paper, CeConfig, PaperSummary, SectionSummary, SummarizeError};
use crate::textproc::SentenceUnit;

pub const DEFAULT_BATCH: usize = 24;

/// Absolute difference below which two metric values tie.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TextCoverage,
    QuerySaliency,
    Diversity,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::TextCoverage, Metric::QuerySaliency, Metric::Diversity];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::TextCoverage => "text_coverage",
            Metric::QuerySaliency => "query_saliency",
            Metric::Diversity => "diversity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    SectionBased,
    Flat,
    Tie,
}

impl Winner {
    pub fn as_str(self) -> &'static str {
        match self {
            Winner::SectionBased => "section_based",
            Winner::Flat => "flat",
            Winner::Tie => "tie",
        }
    }

    fn of(section_based: f64, flat: f64) -> Self {
        if (section_based - flat).abs() <= TIE_TOL {
            Winner::Tie
        } else if section_based > flat {
            Winner::SectionBased
        } else {
            Winner::Flat
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Winner::SectionBased => Winner::Flat,
            Winner::Flat => Winner::SectionBased,
            Winner::Tie => Winner::Tie,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryPair {
    pub section_based: PaperSummary,
    pub flat: SectionSummary,
}

impl SummaryPair {
    pub fn section_based_len(&self) -> usize {
        self.section_based.total_sentences()
    }
}

/// Section-based summary first, then a flat summary of the same total length.
pub fn build_pair(paper: &PaperRecord, profile: &QueryProfile, cfg: &CeConfig) -> Result<SummaryPair, SummarizeError> {
    let section_based = summarize_paper(paper, profile, cfg)?;
    let target = section_based.total_sentences();
    let flat = summarize_flat(paper, profile, target, cfg)?;
    Ok(SummaryPair { section_based, flat })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: Metric,
    pub section_based: f64,
    pub flat: f64,
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub paper_id: String,
    pub metrics: Vec<MetricComparison>,
}

impl ComparisonRow {
    pub fn get(&self, metric: Metric) -> Option<&MetricComparison> {
        self.metrics.iter().find(|m| m.metric == metric)
    }

    /// The same row with the two summary types exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            paper_id: self.paper_id.clone(),
            metrics: self
                .metrics
                .iter()
                .map(|m| MetricComparison { metric: m.metric, section_based: m.flat, flat: m.section_based, winner: m.winner.flipped() })
                .collect(),
        }
    }
}

/// Builds a row from already computed metric values.
pub fn row_from_values(paper_id: &str, values: &[(Metric, f64, f64)]) -> ComparisonRow {
    ComparisonRow {
        paper_id: paper_id.to_owned(),
        metrics: values
            .iter()
            .map(|&(metric, s, f)| MetricComparison { metric, section_based: s, flat: f, winner: Winner::of(s, f) })
            .collect(),
    }
}

/// Compares the two summaries of `paper`. Raw (unfloored) metric values are
/// used so that an empty summary scores 0.
pub fn compare(pair: &SummaryPair, paper: &PaperRecord, profile: &QueryProfile) -> ComparisonRow {
    let mut coverages = Vec::new();
    let mut sb_sentences: Vec<&SentenceUnit> = Vec::new();
    for s in &pair.section_based.per_section {
        let Some(doc) = paper.sections.iter().find(|d| d.section_id == s.section_id) else { continue };
        let picked: Vec<&SentenceUnit> = s.selected.iter().filter_map(|&i| doc.sentences.get(i as usize)).collect();
        if !picked.is_empty() {
            coverages.push(summarizer::text_coverage(&picked, doc));
        }
        sb_sentences.extend(picked);
    }
    let sb_coverage = if coverages.is_empty() { 0.0 } else { coverages.iter().sum::<f64>() / coverages.len() as f64 };

    let (pooled, _) = pool_sections(paper);
    let flat_sentences: Vec<&SentenceUnit> =
        pair.flat.selected.iter().filter_map(|&i| pooled.sentences.get(i as usize)).collect();

    row_from_values(
        &paper.paper_id,
        &[
            (Metric::TextCoverage, sb_coverage, summarizer::text_coverage(&flat_sentences, &pooled)),
            (
                Metric::QuerySaliency,
                summarizer::query_saliency(&sb_sentences, profile),
                summarizer::query_saliency(&flat_sentences, profile),
            ),
            (Metric::Diversity, summarizer::diversity(&sb_sentences), summarizer::diversity(&flat_sentences)),
        ],
    )
}

/// Builds and compares pairs for every paper, in parallel, keeping input
/// order. Each paper is summarized with the seed `cfg.seed + position`.
pub fn run_batch(papers: &[(&PaperRecord, QueryProfile)], cfg: &CeConfig) -> Result<Vec<(SummaryPair, ComparisonRow)>, SummarizeError> {
    papers
        .par_iter()
        .enumerate()
        .map(|(i, (paper, profile))| {
            let cfg = cfg.with_seed(cfg.seed.wrapping_add(i as u64));
            let pair = build_pair(paper, profile, &cfg)?;
            let row = compare(&pair, paper, profile);
            Ok((pair, row))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    /// Percentage of papers on which this type won.
    pub wins_pct: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 for fewer than two papers.
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub papers: usize,
    pub section_based: TypeStats,
    pub flat: TypeStats,
    pub ties_pct: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ComparisonRow>,
    pub summary: Vec<MetricSummary>,
}

impl Report {
    pub fn new(rows: Vec<ComparisonRow>) -> Self {
        let summary = Metric::ALL
            .iter()
            .map(|&metric| {
                let cmp: Vec<&MetricComparison> = rows.iter().filter_map(|r| r.get(metric)).collect();
                let n = cmp.len();
                let pct = |w: Winner| if n == 0 { 0.0 } else { 100.0 * cmp.iter().filter(|c| c.winner == w).count() as f64 / n as f64 };
                let stats = |w: Winner, pick: fn(&MetricComparison) -> f64| {
                    let (mean, std) = mean_std(&cmp.iter().map(|c| pick(c)).collect::<Vec<_>>());
                    TypeStats { wins_pct: pct(w), mean, std }
                };
                MetricSummary {
                    metric,
                    papers: n,
                    section_based: stats(Winner::SectionBased, |c| c.section_based),
                    flat: stats(Winner::Flat, |c| c.flat),
                    ties_pct: pct(Winner::Tie),
                }
            })
            .collect();
        Self { rows, summary }
    }

    pub fn metric(&self, metric: Metric) -> Option<&MetricSummary> {
        self.summary.iter().find(|s| s.metric == metric)
    }

    /// CSV with one row per paper and metric followed by one summary row per
    /// metric. Summary rows have paper_id `mean`, the two means as values,
    /// and the type with more wins (or `tie`) as winner; `std` and
    /// `wins_pct` rows follow in the same shape.
    pub fn write_csv(&self, out: impl io::Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["paper_id", "metric", "section_based_value", "flat_value", "winner"])?;
        for r in &self.rows {
            for m in &r.metrics {
                w.write_record([&r.paper_id, m.metric.as_str(), &fmt_value(m.section_based), &fmt_value(m.flat), m.winner.as_str()])?;
            }
        }
        for s in &self.summary {
            let overall = Winner::of(s.section_based.wins_pct, s.flat.wins_pct).as_str();
            for (label, a, b) in [
                ("mean", s.section_based.mean, s.flat.mean),
                ("std", s.section_based.std, s.flat.std),
                ("wins_pct", s.section_based.wins_pct, s.flat.wins_pct),
            ] {
                w.write_record([label, s.metric.as_str(), &fmt_value(a), &fmt_value(b), overall])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

fn fmt_value(v: f64) -> String {
    format!("{v:.6}")
}

/// Table with "% wins" and "avg (std)" per summary type.
impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut t = String::new();
        writeln!(t, "{:<16} {:>22} {:>22} {:>8}", "", "Section-based", "Section-agnostic", "")?;
        writeln!(t, "{:<16} {:>7} {:>14} {:>7} {:>14} {:>8}", "metric", "% wins", "avg (std)", "% wins", "avg (std)", "% ties")?;
        for s in &self.summary {
            let cell = |x: &TypeStats| format!("{:.3} ({:.3})", x.mean, x.std);
            writeln!(
                t,
                "{:<16} {:>7.1} {:>14} {:>7.1} {:>14} {:>8.1}",
                s.metric.as_str(),
                s.section_based.wins_pct,
                cell(&s.section_based),
                s.flat.wins_pct,
                cell(&s.flat),
                s.ties_pct
            )?;
        }
        f.write_str(&t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{SectionDoc, Source};
    use crate::query::ProfileOrigin;
    use crate::textproc::TextProcessor;
    use proptest::prelude::*;

    fn paper(id: &str, sections: &[&str]) -> PaperRecord {
        let text = TextProcessor::default();
        PaperRecord {
            paper_id: id.into(),
            title: id.into(),
            abstract_text: String::new(),
            authors: vec![],
            venue: String::new(),
            year: 2020,
            source: Source::Acl,
            sections: sections
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let mut s = SectionDoc::new(i as u32, format!("S{i}"), *t);
                    s.sentences = text.sentences(t);
                    s
                })
                .collect(),
            figures: vec![],
        }
    }

    fn profile() -> QueryProfile {
        QueryProfile::from_weights([("graph".to_string(), 1.0)], ProfileOrigin::KeyphraseSurrogate)
    }

    #[test]
    fn flat_length_matches_section_based() {
        let p = paper("x", &["Graph nodes here. Edges link nodes. Paths follow edges.", "Results are good. Graph wins."]);
        let cfg = CeConfig { summary_length: 2, sample_size: 60, ..Default::default() };
        let pair = build_pair(&p, &profile(), &cfg).unwrap();
        assert_eq!(pair.section_based_len(), 4);
        assert_eq!(pair.flat.selected.len(), 4);
    }

    #[test]
    fn single_section_with_everything_selected_ties() {
        let p = paper("x", &["Graph nodes here. Edges link nodes. Paths follow edges."]);
        let pair = build_pair(&p, &profile(), &CeConfig::default()).unwrap();
        let row = compare(&pair, &p, &profile());
        assert!(row.metrics.iter().all(|m| m.winner == Winner::Tie), "{row:?}");
    }

    #[test]
    fn report_aggregates_rows() {
        let rows = vec![
            row_from_values("a", &[(Metric::TextCoverage, 0.8, 0.6), (Metric::QuerySaliency, 0.5, 0.5), (Metric::Diversity, 0.2, 0.9)]),
            row_from_values("b", &[(Metric::TextCoverage, 0.4, 0.6), (Metric::QuerySaliency, 0.1, 0.3), (Metric::Diversity, 0.3, 0.8)]),
        ];
        let r = Report::new(rows);
        let tc = r.metric(Metric::TextCoverage).unwrap();
        assert_eq!(tc.section_based.wins_pct, 50.0);
        assert_eq!(tc.flat.wins_pct, 50.0);
        assert!((tc.section_based.mean - 0.6).abs() < 1e-12);
        assert!((tc.section_based.std - (0.08f64).sqrt()).abs() < 1e-12);
        assert_eq!(tc.flat.std, 0.0);
        let qs = r.metric(Metric::QuerySaliency).unwrap();
        assert_eq!(qs.ties_pct, 50.0);

        let csv = r.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "paper_id,metric,section_based_value,flat_value,winner");
        assert_eq!(lines[1], "a,text_coverage,0.800000,0.600000,section_based");
        assert_eq!(lines.len(), 1 + 6 + 9);
        assert!(lines.contains(&"mean,text_coverage,0.600000,0.600000,tie"));
        assert!(r.to_string().contains("% wins"));
    }

    proptest! {
        #[test]
        fn swap_symmetry_and_percentages(values in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, any::<bool>()), 1..30)) {
            let rows: Vec<ComparisonRow> = values
                .iter()
                .enumerate()
                .map(|(i, &(a, b, tie))| {
                    let b = if tie { a } else { b };
                    row_from_values(&format!("p{i}"), &[(Metric::TextCoverage, a, b), (Metric::QuerySaliency, b, a), (Metric::Diversity, a, a)])
                })
                .collect();
            for r in &rows {
                let s = r.swapped();
                for (m, n) in r.metrics.iter().zip(&s.metrics) {
                    prop_assert_eq!(m.section_based, n.flat);
                    prop_assert_eq!(m.winner.flipped(), n.winner);
                }
            }
            let report = Report::new(rows.clone());
            let swapped = Report::new(rows.iter().map(ComparisonRow::swapped).collect());
            for (s, t) in report.summary.iter().zip(&swapped.summary) {
                prop_assert!((s.section_based.wins_pct + s.flat.wins_pct + s.ties_pct - 100.0).abs() < 1e-9);
                prop_assert!((s.section_based.wins_pct - t.flat.wins_pct).abs() < 1e-9);
                prop_assert!((s.section_based.mean - t.flat.mean).abs() < 1e-12);
                let direct = rows.iter().map(|r| r.get(s.metric).unwrap().section_based).sum::<f64>() / rows.len() as f64;
                prop_assert!((s.section_based.mean - direct).abs() < 1e-12);
            }
        }
    }
}
