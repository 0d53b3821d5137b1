//! The `pcd` command line: `generate`, `detect`, `eval` and `bench`.
//!
//! Results go to stdout as JSON, progress to stderr. Exit codes: 0 on
//! success, 2 for usage or validation errors, 1 for internal failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bench::{run_plan, ExperimentPlan};
use crate::dataset::{
    generate_2d, generate_highdim, load_csv, load_labels, write_csv, write_labels, GenMetadata,
    GenSpec, Interval,
};
use crate::error::Error;
use crate::eval::{best_f_sweep, evaluate, DecisionRule};
use crate::grid::{build_grid, default_cn};
use crate::lof::{lof_scores, LofConfig, DEFAULT_MIN_PTS};
use crate::pcd::{score_grid, DetectionResult, ProjectionSchedule, ScheduleMode, DEFAULT_ROUNDS};

const EXIT_USAGE: i32 = 2;
const EXIT_INTERNAL: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "pcd",
    version,
    about = "Projected cell density outlier detection"
)]
pub struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "PCD_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset, its labels and a metadata record.
    Generate(GenerateArgs),
    /// Score a CSV dataset and print the ranking as JSON.
    Detect(DetectArgs),
    /// Evaluate a detection result against ground-truth labels.
    Eval(EvalArgs),
    /// Run an experiment plan.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenMode {
    Highdim,
    #[value(name = "2d")]
    TwoD,
}

/// `lo,hi` on the command line.
#[derive(Debug, Clone, Copy)]
pub struct RangeArg(Interval);

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
        Ok(RangeArg(Interval::new(parse(lo)?, parse(hi)?)))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "highdim")]
    pub mode: GenMode,
    #[arg(long, default_value_t = 100)]
    pub dims: usize,
    #[arg(long, default_value_t = 500)]
    pub points: usize,
    #[arg(long, default_value_t = 10)]
    pub outliers: usize,
    #[arg(long, default_value_t = 5)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "LO,HI")]
    pub mean_range: Option<RangeArg>,
    #[arg(long, value_name = "LO,HI")]
    pub sd_range: Option<RangeArg>,
    #[arg(long, value_name = "LO,HI")]
    pub outlier_range: Option<RangeArg>,
    /// Data CSV path; labels go to `<stem>.labels`, metadata to `<stem>.meta.json`.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorArg {
    Pcd,
    Lof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Full,
    Sampled,
    Auto,
}

#[derive(Debug, Args)]
#[group(id = "rule", multiple = false)]
pub struct RuleArgs {
    /// Report the k highest-scoring points as outliers.
    #[arg(long, group = "rule")]
    pub top_k: Option<usize>,
    /// Report every point scoring at least this value.
    #[arg(long, group = "rule")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "pcd")]
    pub detector: DetectorArg,
    /// Cells per dimension (defaults to ceil(sqrt(n))).
    #[arg(long)]
    pub cn: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    pub schedule: ScheduleArg,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_PTS)]
    pub min_pts: usize,
    #[command(flatten)]
    pub rule: RuleArgs,
    /// Also write the cell index as JSON (pcd only).
    #[arg(long, value_name = "PATH")]
    pub dump_grid: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON written by `detect`.
    #[arg(long, short)]
    pub result: PathBuf,
    #[arg(long, short)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub rule: RuleArgs,
    /// Pick the threshold with the best F-measure.
    #[arg(long, conflicts_with = "rule")]
    pub sweep: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Plan JSON; the shipped default plan when omitted.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Replace the plan's seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Write the full report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write one CSV line per run here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// What `detect` prints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectOutput {
    pub detector: DetectorArg,
    pub rule: DecisionRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cn: Option<usize>,
    pub outliers: Vec<usize>,
    #[serde(flatten)]
    pub result: DetectionResult,
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            EXIT_INTERNAL
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::Internal(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|()| out.flush()) {
        // The reader went away (e.g. `| head`); nothing left to report.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(|e| Failure::Internal(e.to_string())),
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e).into())
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let (ds, meta) = match a.mode {
        GenMode::TwoD => (generate_2d(a.seed), GenMetadata::TwoD { seed: a.seed }),
        GenMode::Highdim => {
            let d = GenSpec::default();
            let spec = GenSpec {
                m: a.dims,
                n: a.points,
                cluster_count: a.clusters,
                mean_range: a.mean_range.map_or(d.mean_range, |r| r.0),
                sd_range: a.sd_range.map_or(d.sd_range, |r| r.0),
                outlier_count: a.outliers,
                outlier_range: a.outlier_range.map_or(d.outlier_range, |r| r.0),
                seed: a.seed,
            };
            let ds = generate_highdim(&spec)?;
            (ds, GenMetadata::Highdim { seed: a.seed, spec })
        }
    };
    let labels_path = sidecar(&a.output, "labels");
    let meta_path = sidecar(&a.output, "meta.json");
    write_csv(&ds, &a.output)?;
    write_labels(
        ds.labels().expect("generated data is labelled"),
        &labels_path,
    )?;
    write_json(&meta, &meta_path)?;
    print_json(&serde_json::json!({
        "data": a.output,
        "labels": labels_path,
        "metadata": meta_path,
    }))
}

fn schedule_from(a: &DetectArgs) -> ProjectionSchedule {
    let mode = match a.schedule {
        ScheduleArg::Full => ScheduleMode::Full,
        ScheduleArg::Sampled => ScheduleMode::Sampled,
        ScheduleArg::Auto => ScheduleMode::Auto,
    };
    ProjectionSchedule {
        mode,
        rounds: a.rounds,
        seed: a.seed,
    }
}

fn rule_from(r: &RuleArgs) -> Option<DecisionRule> {
    match (r.top_k, r.threshold) {
        (Some(k), _) => Some(DecisionRule::TopK(k)),
        (None, Some(t)) => Some(DecisionRule::Threshold(t)),
        (None, None) => None,
    }
}

fn cmd_detect(a: DetectArgs) -> Result<(), Failure> {
    let rule = rule_from(&a.rule)
        .ok_or_else(|| Failure::Usage("one of --top-k or --threshold is required".into()))?;
    let ds = load_csv(&a.input, None)?;
    if let DecisionRule::TopK(k) = rule {
        if k == 0 || k > ds.n() {
            return Err(Failure::Usage(format!(
                "--top-k must be between 1 and {}, got {k}",
                ds.n()
            )));
        }
    }
    let (scores, cn) = match a.detector {
        DetectorArg::Pcd => {
            let cn = a.cn.unwrap_or_else(|| default_cn(ds.n()));
            let grid = build_grid(&ds, cn)?;
            if let Some(path) = &a.dump_grid {
                write_json(&grid, path)?;
            }
            (score_grid(&grid, &schedule_from(&a))?.si, Some(cn))
        }
        DetectorArg::Lof => {
            if a.cn.is_some() || a.dump_grid.is_some() {
                return Err(Failure::Usage(
                    "--cn and --dump-grid apply to the pcd detector only".into(),
                ));
            }
            let scores = lof_scores(&ds, &LofConfig { min_pts: a.min_pts })?;
            (scores, None)
        }
    };
    let (k, threshold) = match rule {
        DecisionRule::TopK(k) => (k, None),
        DecisionRule::Threshold(t) => (scores.iter().filter(|&&s| s >= t).count(), Some(t)),
    };
    let result = DetectionResult::from_scores(&scores, k, threshold);
    print_json(&DetectOutput {
        detector: a.detector,
        rule,
        cn,
        outliers: result.top_k(),
        result,
    })
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.result).map_err(|e| Error::io(&a.result, e))?;
    let detection: DetectOutput = serde_json::from_str(&text).map_err(Error::from)?;
    let labels = load_labels(&a.labels)?;
    let scores = detection.result.scores();
    let name = match detection.detector {
        DetectorArg::Pcd => "pcd",
        DetectorArg::Lof => "lof",
    };
    let report = if a.sweep {
        best_f_sweep(&scores, &labels)?.1
    } else {
        let rule = rule_from(&a.rule).unwrap_or(detection.rule);
        evaluate(&scores, &labels, rule)?
    };
    print_json(&report.with_detector(name))
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let mut plan = match &a.plan {
        Some(path) => ExperimentPlan::load(path)?,
        None => ExperimentPlan::default_plan(),
    };
    if let Some(seeds) = a.seeds {
        plan.seeds = seeds;
    }
    let report = run_plan(&plan)?;
    if let Some(path) = &a.csv {
        report.write_runs_csv(path)?;
    }
    match &a.report {
        Some(path) => {
            write_json(&report, path)?;
            print_json(&serde_json::json!({ "report": path, "csv": a.csv }))
        }
        None => print_json(&report),
    }
}
