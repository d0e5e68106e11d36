use std::collections::BTreeSet;

use scisumm_core::evalharness::{self, Metric, Report};
use scisumm_core::index::SearchFilter;
use scisumm_core::ingest::{read_corpus, DedupeConfig};
use scisumm_core::pipeline::Pipeline;
use scisumm_core::query::{ProfileOrigin, QueryBuilder};
use scisumm_core::summarizer::{summarize_paper, SummaryOutput};
use scisumm_core::synth::{self, CorpusSpec};
use scisumm_core::{Config, Index, TextProcessor};

fn build(seed: u64, spec: &CorpusSpec) -> (Index, scisumm_core::EntityDictionary, usize) {
    let dict = synth::dictionary();
    let pipeline = Pipeline::new(TextProcessor::default(), dict.clone());
    let jsonl = synth::corpus_jsonl(seed, spec);
    let (papers, stats) = pipeline.ingest(jsonl.as_bytes(), &DedupeConfig::default()).unwrap();
    let mut index = Index::default();
    for p in papers {
        index.index_paper(p).unwrap();
    }
    (index, dict, stats.duplicates_removed)
}

#[test]
fn corpus_records_survive_serialization() {
    let jsonl = synth::corpus_jsonl(3, &CorpusSpec { papers: 12, ..CorpusSpec::default() });
    let records = read_corpus(jsonl.as_bytes()).unwrap();
    let again: String = records.iter().map(|r| format!("{}\n", r.to_input_json())).collect();
    assert_eq!(read_corpus(again.as_bytes()).unwrap(), records);
}

#[test]
fn ingest_search_summarize_evaluate() {
    let spec = CorpusSpec { papers: 8, duplicates: 3, ..CorpusSpec::default() };
    let (index, dict, removed) = build(5, &spec);
    assert_eq!(removed, 3);
    assert_eq!(index.len(), 8);

    let cfg = Config::default();
    let qcfg = cfg.query();
    let builder = QueryBuilder::new(&index, &dict, &qcfg);
    let target = index.papers().nth(2).unwrap();
    let hits = index.search(&index.text_processor().normalize(&target.title), &SearchFilter::default(), 3).unwrap();
    assert_eq!(hits[0].paper_id, target.paper_id);

    let profile = builder.build(None, target, &BTreeSet::new());
    assert_eq!(profile.origin, ProfileOrigin::KeyphraseSurrogate);
    let ce = cfg.summarizer.with_length(3).with_seed(1);
    let summary = summarize_paper(target, &profile, &ce).unwrap();
    let out = SummaryOutput::new(target, &summary, Some(&profile));
    assert_eq!(out.sections.len(), target.sections.len());
    for (s, doc) in out.sections.iter().zip(&target.sections) {
        assert_eq!(s.sentences.len(), doc.sentences.len().min(3));
        assert!(s.objective.product > 0.0 && s.objective.product <= 1.0);
    }

    let batch: Vec<_> = index.papers().map(|p| (p, builder.build(None, p, &BTreeSet::new()))).collect();
    let rows = evalharness::run_batch(&batch, &ce).unwrap();
    for (pair, _) in &rows {
        assert_eq!(pair.flat.selected.len(), pair.section_based_len());
    }
    let report = Report::new(rows.into_iter().map(|(_, r)| r).collect());
    let csv = report.to_csv_string();
    assert_eq!(csv.lines().skip(1).filter(|l| !["mean,", "std,", "wins_pct,"].iter().any(|s| l.starts_with(s))).count(), 8 * Metric::ALL.len());
    assert!(report.to_string().contains("% wins"));
}
