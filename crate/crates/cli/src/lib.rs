//! Command implementations behind the `structeval` binary.

// `!(x > 0.0)` is how config checks reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod serve;

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use structeval::corpusio::{
    fmt4, generate_fixtures, parse_corpus_lines, read_dir_pair, read_line_pair, write_corpus, write_report,
    CorruptionKind, CorruptionRate, FixtureSpec,
};
use structeval::docmetrics::{parse_metric_list, CorpusEvaluation, Metric};
use structeval::grposim::{run_training, CandidatePool, TrainConfig};
use structeval::stats::{paired_bootstrap, BootstrapConfig};
use structeval::textmetrics::Tokenizer;
use structeval::{evaluate_corpus, CorpusRecord, EvalConfig, ReportFormat, RewardSpec};

/// Everything that ends the process with exit code 2.
#[derive(Debug)]
pub struct CliError(pub String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<structeval::Error> for CliError {
    fn from(e: structeval::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "structeval", version, about = "Structure-aware evaluation for XML document translation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a corpus and print a report
    Eval(EvalArgs),
    /// Paired bootstrap comparison of two systems
    Compare(CompareArgs),
    /// Reward service over line-delimited JSON
    Serve(ServeArgs),
    /// GRPO on a categorical policy over candidate pools
    Simulate(SimulateArgs),
    /// Write a synthetic corpus as JSONL
    Fixtures(FixtureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TokenizerArg {
    Whitespace,
    Character,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSONL corpus with id, hypothesis and reference fields
    #[arg(long, conflicts_with_all = ["hyp", "reference"])]
    pub corpus: Option<PathBuf>,
    /// Hypothesis file (one document per line) or directory
    #[arg(long, requires = "reference")]
    pub hyp: Option<PathBuf>,
    /// Reference file (one document per line) or directory
    #[arg(long = "ref", requires = "hyp")]
    pub reference: Option<PathBuf>,
    /// Comma-separated metric names, or "all"
    #[arg(long, default_value = "all")]
    pub metrics: String,
    #[arg(long, default_value_t = structeval::docmetrics::DEFAULT_STRUCAUC_K)]
    pub strucauc_k: f64,
    #[arg(long, value_enum, default_value = "whitespace")]
    pub tokenizer: TokenizerArg,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Compare attributes in XML-Match and XML-BLEU
    #[arg(long, value_enum, default_value = "on")]
    pub attrs: Switch,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (STRUCTEVAL_THREADS overrides)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub baseline: PathBuf,
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, default_value = "all")]
    pub metrics: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 12345)]
    pub seed: u64,
    #[arg(long, default_value_t = structeval::docmetrics::DEFAULT_STRUCAUC_K)]
    pub strucauc_k: f64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Serve on stdin/stdout (the default)
    #[arg(long, conflicts_with = "listen")]
    pub stdio: bool,
    /// Serve TCP connections on host:port
    #[arg(long)]
    pub listen: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSONL pools with id, reference and candidates fields
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long, default_value = "treesim")]
    pub reward: String,
    /// Samples per step
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corruption as kind:rate:count, e.g. relabel-tag:0.5:2 (repeatable)
    #[arg(long = "corrupt")]
    pub corruptions: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Eval(a) => cmd_eval(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Serve(a) => cmd_serve(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Fixtures(a) => cmd_fixtures(&a),
    }
}

fn thread_count(flag: Option<usize>) -> CliResult<usize> {
    if let Ok(v) = std::env::var("STRUCTEVAL_THREADS") {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError(format!("STRUCTEVAL_THREADS must be a positive integer, got {v:?}"))),
        };
    }
    match flag {
        Some(0) => Err(CliError("--threads must be positive".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(threads)?)
        .build()
        .map_err(|e| CliError(e.to_string()))?;
    Ok(pool.install(f))
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Reads a JSONL corpus, reporting every bad line on stderr.
pub fn load_corpus(path: &Path) -> CliResult<Vec<CorpusRecord>> {
    let file = fs::File::open(path).map_err(|e| CliError(format!("{}: {e}", display(path))))?;
    let (records, errors) = parse_corpus_lines(BufReader::new(file));
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("{}: {e}", display(path));
        }
        return Err(CliError(format!("{} bad line(s) in {}", errors.len(), display(path))));
    }
    if records.is_empty() {
        return Err(CliError(format!("{}: corpus is empty", display(path))));
    }
    Ok(records)
}

fn load_eval_records(a: &EvalArgs) -> CliResult<Vec<CorpusRecord>> {
    match (&a.corpus, &a.hyp, &a.reference) {
        (Some(c), _, _) => load_corpus(c),
        (None, Some(h), Some(r)) => {
            let records = if h.is_dir() && r.is_dir() {
                read_dir_pair(h, r)?
            } else {
                read_line_pair(h, r).map_err(|e| CliError(format!("{} / {}: {e}", display(h), display(r))))?
            };
            if records.is_empty() {
                return Err(CliError("corpus is empty".into()));
            }
            Ok(records)
        }
        _ => Err(CliError("need --corpus or both --hyp and --ref".into())),
    }
}

fn eval_config(strucauc_k: f64, tokenizer: TokenizerArg, attrs: Switch) -> CliResult<EvalConfig> {
    if !(strucauc_k > 0.0) || !strucauc_k.is_finite() {
        return Err(CliError("--strucauc-k must be positive".into()));
    }
    let mut cfg = EvalConfig {
        strucauc_k,
        compare_attributes: attrs == Switch::On,
        ..EvalConfig::default()
    };
    cfg.bleu.tokenizer = match tokenizer {
        TokenizerArg::Whitespace => Tokenizer::Whitespace,
        TokenizerArg::Character => Tokenizer::Character,
    };
    Ok(cfg)
}

pub fn cmd_eval(a: &EvalArgs) -> CliResult {
    let metrics = parse_metric_list(&a.metrics)?;
    let cfg = eval_config(a.strucauc_k, a.tokenizer, a.attrs)?;
    let records = load_eval_records(a)?;
    let report = with_pool(a.threads, || evaluate_corpus(&records, &metrics, &cfg))??;
    let format = match a.format {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Tsv => ReportFormat::Tsv,
    };
    let bytes = write_report(&report, format);
    match &a.out {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError(format!("{}: {e}", display(p))))?,
        None => io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

/// Reorders `system` to follow the ids of `baseline`.
fn align_by_id(baseline: &[CorpusRecord], system: Vec<CorpusRecord>) -> CliResult<Vec<CorpusRecord>> {
    let mut by_id: std::collections::HashMap<String, CorpusRecord> =
        system.into_iter().map(|r| (r.id.clone(), r)).collect();
    let mut aligned = Vec::with_capacity(baseline.len());
    for b in baseline {
        match by_id.remove(&b.id) {
            Some(r) => aligned.push(r),
            None => return Err(CliError(format!("id {:?} is missing from the system corpus", b.id))),
        }
    }
    if let Some(extra) = by_id.keys().min() {
        return Err(CliError(format!("id {extra:?} is missing from the baseline corpus")));
    }
    Ok(aligned)
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub metric: Metric,
    pub baseline: f64,
    pub system: f64,
    pub p_value: f64,
}

/// Bootstrap p-value per metric for `system` improving on `baseline`.
pub fn compare_corpora(
    baseline: &[CorpusRecord],
    system: &[CorpusRecord],
    metrics: &[Metric],
    cfg: &EvalConfig,
    bootstrap: &BootstrapConfig,
) -> CliResult<Vec<Comparison>> {
    let pairs = |rs: &[CorpusRecord]| -> Vec<(String, String)> {
        rs.iter().map(|r| (r.hypothesis.clone(), r.reference.clone())).collect()
    };
    let base = CorpusEvaluation::new(&pairs(baseline), metrics, cfg)?;
    let sys = CorpusEvaluation::new(&pairs(system), metrics, cfg)?;
    let all: Vec<usize> = (0..base.len()).collect();
    let base_full = base.aggregate(&all)?;
    let sys_full = sys.aggregate(&all)?;
    let mut rows = Vec::new();
    for &m in &base.metrics {
        let only = |e: &CorpusEvaluation| CorpusEvaluation {
            metrics: vec![m],
            config: e.config,
            docs: e.docs.clone(),
        };
        let (b, s) = (only(&base), only(&sys));
        let score = |e: &CorpusEvaluation, idx: &[usize]| e.aggregate(idx).ok().and_then(|a| a.get(m)).unwrap_or(0.0);
        let p = paired_bootstrap(base.len(), |idx| score(&b, idx), |idx| score(&s, idx), bootstrap)?;
        rows.push(Comparison {
            metric: m,
            baseline: base_full.get(m).unwrap_or(0.0),
            system: sys_full.get(m).unwrap_or(0.0),
            p_value: p,
        });
    }
    Ok(rows)
}

pub fn format_comparison(rows: &[Comparison]) -> String {
    let mut out = String::from("metric\tbaseline\tsystem\tp_value\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\n",
            r.metric,
            fmt4(r.baseline),
            fmt4(r.system),
            r.p_value
        ));
    }
    out
}

pub fn cmd_compare(a: &CompareArgs) -> CliResult {
    let metrics = parse_metric_list(&a.metrics)?;
    let cfg = eval_config(a.strucauc_k, TokenizerArg::Whitespace, Switch::On)?;
    // id order makes the p-values independent of line order
    let mut baseline = load_corpus(&a.baseline)?;
    baseline.sort_by(|x, y| x.id.cmp(&y.id));
    let system = align_by_id(&baseline, load_corpus(&a.system)?)?;
    let bootstrap = BootstrapConfig {
        trials: a.trials,
        seed: a.seed,
    };
    let rows = with_pool(a.threads, || compare_corpora(&baseline, &system, &metrics, &cfg, &bootstrap))??;
    io::stdout().lock().write_all(format_comparison(&rows).as_bytes())?;
    Ok(())
}

pub fn cmd_serve(a: &ServeArgs) -> CliResult {
    match &a.listen {
        Some(addr) => serve::serve_tcp(addr),
        None => {
            let stdin = io::stdin();
            let stdout = io::stdout();
            serve::serve_stream(stdin.lock(), stdout.lock())?;
            Ok(())
        }
    }
}

#[derive(Debug, Deserialize)]
struct PoolLine {
    id: String,
    reference: String,
    candidates: Vec<String>,
}

/// Runs training on every pool line and returns the JSONL trace.
pub fn simulate<R: BufRead>(pools: R, a: &SimulateArgs) -> CliResult<String> {
    let spec: RewardSpec = a.reward.parse()?;
    let cfg = TrainConfig {
        samples_per_step: a.k,
        learning_rate: a.lr,
        beta: a.beta,
        steps: a.steps,
        seed: a.seed,
    };
    cfg.validate()?;
    let mut out = String::new();
    let mut seen = 0usize;
    for (i, line) in pools.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: PoolLine =
            serde_json::from_str(&line).map_err(|e| CliError(format!("pool line {}: {e}", i + 1)))?;
        if p.candidates.len() < 2 {
            return Err(CliError(format!(
                "pool {:?} has {} candidate(s); need at least 2",
                p.id,
                p.candidates.len()
            )));
        }
        let pool = CandidatePool::from_documents(p.id.clone(), p.candidates, p.reference, &spec)
            .map_err(|e| CliError(format!("pool {:?}: {e}", p.id)))?;
        let trace = run_training(&pool, &cfg)?;
        for s in &trace.steps {
            let line = json!({"pool": p.id, "step": s.step, "mean_reward": s.mean_reward, "kl": s.kl, "entropy": s.entropy});
            out.push_str(&line.to_string());
            out.push('\n');
        }
        let last = json!({
            "pool": p.id,
            "rewards": pool.rewards,
            "final_probabilities": trace.final_policy.probabilities(),
        });
        out.push_str(&last.to_string());
        out.push('\n');
        seen += 1;
    }
    if seen == 0 {
        return Err(CliError("no pools found".into()));
    }
    Ok(out)
}

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult {
    let file = fs::File::open(&a.pool).map_err(|e| CliError(format!("{}: {e}", display(&a.pool))))?;
    let out = simulate(BufReader::new(file), a)?;
    io::stdout().lock().write_all(out.as_bytes())?;
    Ok(())
}

fn parse_corruption(s: &str) -> CliResult<CorruptionRate> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError(format!("corruption {s:?} is not kind:rate:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let kind: CorruptionKind = parts[0].parse()?;
    let rate = parts[1].parse().map_err(|_| bad())?;
    let count = parts[2].parse().map_err(|_| bad())?;
    Ok(CorruptionRate { kind, rate, count })
}

pub fn cmd_fixtures(a: &FixtureArgs) -> CliResult {
    let spec = FixtureSpec {
        doc_count: a.count,
        corruptions: a
            .corruptions
            .iter()
            .map(|s| parse_corruption(s))
            .collect::<CliResult<_>>()?,
        ..FixtureSpec::default()
    };
    let records: Vec<CorpusRecord> = generate_fixtures(&spec, a.seed)?.into_iter().map(|f| f.record).collect();
    let text = write_corpus(&records);
    match &a.out {
        Some(p) => fs::write(p, text).map_err(|e| CliError(format!("{}: {e}", display(p))))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
