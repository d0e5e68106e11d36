use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use scisumm_core::evalharness::{self, Report};
use scisumm_core::ingest::IngestError;
use scisumm_core::pipeline::Pipeline;
use scisumm_core::query::QueryBuilder;
use scisumm_core::snapshot::Snapshot;
use scisumm_core::textproc::Stopwords;
use scisumm_core::{Config, EntityDictionary, EntityKey, EntityKind, Index, TextProcessor};
use scisumm_server::api::{self, ApiError, FilterBody, SearchRequest, SummarizeRequest, SummaryKey};
use scisumm_server::AppState;

/// Search, summarize and evaluate a corpus of scientific papers.
#[derive(Parser)]
#[command(name = "scisumm", version)]
struct Cli {
    /// TOML config file; defaults to $SCISUMM_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, dedupe and tag a JSON-lines corpus and write an index snapshot.
    Ingest {
        input: PathBuf,
        /// Entity dictionary TSV; repeatable.
        #[arg(long = "dict")]
        dicts: Vec<PathBuf>,
        /// Stopword list replacing the bundled English one.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Ranked search over a snapshot.
    Search(SearchArgs),
    /// Per-section summary of one paper as JSON.
    Summarize {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        paper_id: String,
        #[arg(long)]
        query: Option<String>,
        /// Sentences per section.
        #[arg(long, allow_negative_numbers = true)]
        length: Option<i64>,
        /// Overrides the seed derived from paper id and query.
        #[arg(long)]
        seed: Option<u64>,
        /// Score candidates on the calling thread only.
        #[arg(long)]
        single_threaded: bool,
    },
    /// Compare section-based and flat summaries and write a CSV report.
    Eval {
        #[arg(long)]
        snapshot: PathBuf,
        /// One paper id per line; defaults to the first `eval.batch_size` papers.
        #[arg(long)]
        papers: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        query: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        length: Option<usize>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    query: Option<String>,
    #[arg(long)]
    venue: Option<String>,
    #[arg(long)]
    year_from: Option<i64>,
    #[arg(long)]
    year_to: Option<i64>,
    #[arg(long)]
    author: Option<String>,
    /// KIND:NAME, e.g. Task:machine translation; repeatable.
    #[arg(long = "entity")]
    entities: Vec<String>,
    #[arg(long, short, default_value_t = api::DEFAULT_K)]
    k: usize,
    /// Print the raw API response instead of a table.
    #[arg(long)]
    json: bool,
}

/// A failed command and its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Failure { code: e.exit_code() as u8, error: e.into() }
    }
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Config::from_process_env(cli.config.as_deref())
        .map_err(|e| usage(e.into()))
        .and_then(|cfg| run(cli.command, cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command, cfg: Config) -> CmdResult {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Ingest { input, dicts, stopwords, out: path } => ingest(&mut out, &cfg, &input, &dicts, stopwords.as_deref(), &path),
        Command::Search(args) => search(&mut out, &cfg, args),
        Command::Summarize { snapshot, paper_id, query, length, seed, single_threaded } => {
            let mut cfg = cfg;
            if single_threaded {
                cfg.summarizer.parallel = false;
            }
            let snap = load(&snapshot)?;
            let key = SummaryKey::new(SummarizeRequest { paper_id, query, length }, &cfg, seed)?;
            let summary = api::summarize(&snap, &cfg, &key)?;
            let text = serde_json::to_string_pretty(&summary).context("encoding summary")?;
            writeln!(out, "{text}").context("writing output")?;
            Ok(())
        }
        Command::Eval { snapshot, papers, out: csv, query, seed, length } => {
            eval(&mut out, &cfg, &snapshot, papers.as_deref(), csv.as_deref(), query.as_deref(), seed, length)
        }
        Command::Serve { snapshot, bind, port } => serve(cfg, snapshot, bind, port),
    }
}

fn load(path: &Path) -> Result<Snapshot, Failure> {
    Snapshot::load(path).with_context(|| format!("loading snapshot {}", path.display())).map_err(usage)
}

fn ingest(out: &mut impl Write, cfg: &Config, input: &Path, dicts: &[PathBuf], stopwords: Option<&Path>, path: &Path) -> CmdResult {
    let dictionary = EntityDictionary::load(dicts).map_err(|e| usage(e.into()))?;
    let stopwords = match stopwords {
        Some(p) => Stopwords::load(p).with_context(|| format!("reading {}", p.display())).map_err(usage)?,
        None => Stopwords::english(),
    };
    let text = TextProcessor::new(stopwords);
    let pipeline = Pipeline::new(text.clone(), dictionary.clone());
    let file = File::open(input).with_context(|| format!("opening {}", input.display())).map_err(usage)?;
    let (papers, stats) = pipeline.ingest(BufReader::new(file), &cfg.dedupe).map_err(|e| match e {
        IngestError::Io(_) => Failure::from(anyhow!(e)),
        other => usage(anyhow!(other).context(format!("ingesting {}", input.display()))),
    })?;

    let mut index = Index::new(cfg.bm25, text);
    for p in papers {
        index.index_paper(p).map_err(|e| usage(e.into()))?;
    }
    let mut per_entity: BTreeMap<EntityKey, (usize, usize)> = BTreeMap::new();
    for p in index.papers() {
        let mut seen = BTreeSet::new();
        for m in p.mentions() {
            let e = per_entity.entry(m.entity.clone()).or_default();
            e.1 += 1;
            if seen.insert(&m.entity) {
                e.0 += 1;
            }
        }
    }
    let snap = Snapshot::new(index, dictionary);
    snap.save(path).with_context(|| format!("writing {}", path.display()))?;

    let mut report = String::new();
    report += &format!("papers_read: {}\n", stats.papers_read);
    report += &format!("papers: {}\n", stats.papers);
    report += &format!("duplicates_removed: {}\n", stats.duplicates_removed);
    for kind in EntityKind::ALL {
        let distinct = per_entity.keys().filter(|k| k.kind() == kind).count();
        let mentions = stats.mentions_per_kind.get(&kind).copied().unwrap_or(0);
        report += &format!("entities.{kind}: {distinct} distinct, {mentions} mentions\n");
    }
    for (key, (papers, mentions)) in &per_entity {
        report += &format!("entity {}/{}: papers={papers} mentions={mentions}\n", key.kind(), key.canonical());
    }
    report += "sections_per_paper:\n";
    for (sections, count) in &stats.sections_histogram {
        report += &format!("  {sections}: {count}\n");
    }
    report += &format!("snapshot: {}\n", path.display());
    out.write_all(report.as_bytes()).context("writing report")?;
    Ok(())
}

fn parse_entity(spec: &str) -> Result<EntityKey, Failure> {
    let (kind, name) = spec.split_once(':').ok_or_else(|| usage(anyhow!("entity {spec:?} is not KIND:NAME")))?;
    let kind: EntityKind = kind.trim().parse().map_err(|e: String| usage(anyhow!(e)))?;
    Ok(EntityKey::new(kind, name.trim()))
}

fn search(out: &mut impl Write, cfg: &Config, args: SearchArgs) -> CmdResult {
    let year_range = match (args.year_from, args.year_to) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(i64::MIN), hi.unwrap_or(i64::MAX))),
    };
    let filters = FilterBody {
        venue: args.venue,
        year_range,
        author: args.author,
        entities: args.entities.iter().map(|e| parse_entity(e)).collect::<Result<_, _>>()?,
    };
    let snap = load(&args.snapshot)?;
    let resp = api::search(&snap, cfg, SearchRequest { query: args.query, filters: Some(filters), k: Some(args.k) })?;
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&resp).context("encoding response")?).context("writing output")?;
        return Ok(());
    }
    let mut table = String::new();
    if let Some(p) = &resp.profile {
        table += &format!("profile: {}\n", p.origin.as_str());
    }
    table += &format!("{:<5} {:>9}  {:<14} {}\n", "rank", "score", "paper_id", "title");
    for (i, r) in resp.results.iter().enumerate() {
        let title = snap.index.paper(&r.paper_id).map_or("", |p| p.title.as_str());
        table += &format!("{:<5} {:>9.4}  {:<14} {}\n", i + 1, r.score, r.paper_id, title);
    }
    if !resp.facets.is_empty() {
        table += "facets:\n";
        for f in &resp.facets {
            table += &format!("  {}/{}: {}\n", f.kind, f.entity, f.count);
        }
    }
    out.write_all(table.as_bytes()).context("writing output")?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eval(
    out: &mut impl Write,
    cfg: &Config,
    snapshot: &Path,
    papers: Option<&Path>,
    csv: Option<&Path>,
    query: Option<&str>,
    seed: Option<u64>,
    length: Option<usize>,
) -> CmdResult {
    let snap = load(snapshot)?;
    let ids: Vec<String> = match papers {
        Some(p) => std::fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))
            .map_err(usage)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_owned)
            .collect(),
        None => snap.index.papers().take(cfg.eval.batch_size).map(|p| p.paper_id.clone()).collect(),
    };
    let qcfg = cfg.query();
    let builder = QueryBuilder::new(&snap.index, &snap.dictionary, &qcfg);
    let mut batch = Vec::with_capacity(ids.len());
    for id in &ids {
        let paper = snap.index.paper(id).ok_or_else(|| ApiError::NotFound(id.clone()))?;
        batch.push((paper, builder.build(query, paper, &BTreeSet::new())));
    }
    let mut ce = cfg.summarizer;
    if let Some(s) = seed {
        ce.seed = s;
    }
    if let Some(l) = length {
        if l == 0 {
            return Err(ApiError::InvalidLength(0).into());
        }
        ce.summary_length = l;
    }
    let results = evalharness::run_batch(&batch, &ce).map_err(|e| anyhow!(e))?;
    let report = Report::new(results.into_iter().map(|(_, row)| row).collect());
    match csv {
        Some(path) => {
            std::fs::write(path, report.to_csv_string()).with_context(|| format!("writing {}", path.display()))?;
            write!(out, "{report}").context("writing output")?;
        }
        None => out.write_all(report.to_csv_string().as_bytes()).context("writing output")?,
    }
    Ok(())
}

fn serve(cfg: Config, snapshot: Option<PathBuf>, bind: Option<String>, port: Option<u16>) -> CmdResult {
    let mut cfg = cfg;
    if let Some(b) = bind {
        cfg.service.bind = b;
    }
    if let Some(p) = port {
        cfg.service.port = p;
    }
    let path = snapshot
        .or_else(|| cfg.service.snapshot.clone())
        .ok_or_else(|| usage(anyhow!("no snapshot given (--snapshot or service.snapshot)")))?;
    let snap = load(&path)?;
    let addr: SocketAddr = format!("{}:{}", cfg.service.bind, cfg.service.port)
        .parse()
        .map_err(|e| usage(anyhow!("bad bind address: {e}")))?;
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    eprintln!("listening on http://{addr}");
    runtime.block_on(scisumm_server::serve(AppState::new(snap, cfg), addr)).context("serving")?;
    Ok(())
}
