//! Experiment runner: generate datasets, run detectors, evaluate, aggregate.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{generate_highdim, Dataset, GenSpec, Interval};
use crate::error::{Error, Result};
use crate::eval::{best_f_sweep, evaluate, DecisionRule, EvalReport};
use crate::grid::default_cn;
use crate::lof::{lof_scores, LofConfig};
use crate::pcd::{score, ProjectionSchedule};

/// Eight dataset shapes from 10 to 10 000 dimensions, both detectors, one seed.
pub const DEFAULT_PLAN: &str = include_str!("../plans/default.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Pcd,
    Lof,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Pcd => "pcd",
            DetectorKind::Lof => "lof",
        }
    }
}

/// Generator settings a plan row may change; unset fields keep the
/// [`GenSpec`] defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenOverrides {
    pub cluster_count: Option<usize>,
    pub mean_range: Option<Interval>,
    pub sd_range: Option<Interval>,
    pub outlier_count: Option<usize>,
    pub outlier_range: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRow {
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub cn: Option<usize>,
    #[serde(default)]
    pub gen: GenOverrides,
}

impl PlanRow {
    pub fn gen_spec(&self, seed: u64) -> GenSpec {
        let d = GenSpec::new(self.m, self.n, seed);
        let o = &self.gen;
        GenSpec {
            cluster_count: o.cluster_count.unwrap_or(d.cluster_count),
            mean_range: o.mean_range.unwrap_or(d.mean_range),
            sd_range: o.sd_range.unwrap_or(d.sd_range),
            outlier_count: o.outlier_count.unwrap_or(d.outlier_count),
            outlier_range: o.outlier_range.unwrap_or(d.outlier_range),
            ..d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub rows: Vec<PlanRow>,
    pub detectors: Vec<DetectorKind>,
    pub seeds: Vec<u64>,
    /// Cell count for every row, taking precedence over per-row values.
    #[serde(default)]
    pub cn_override: Option<usize>,
    #[serde(default)]
    pub schedule: ProjectionSchedule,
    #[serde(default)]
    pub lof: LofConfig,
}

impl ExperimentPlan {
    pub fn default_plan() -> Self {
        serde_json::from_str(DEFAULT_PLAN).expect("shipped plan parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let plan: Self = serde_json::from_str(&text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() || self.detectors.is_empty() || self.seeds.is_empty() {
            return Err(Error::invalid(
                "plan needs at least one row, one detector and one seed",
            ));
        }
        self.schedule.validate()
    }

    /// Cell count used for `row`.
    pub fn cn_for(&self, row: &PlanRow) -> usize {
        self.cn_override
            .or(row.cn)
            .unwrap_or_else(|| default_cn(row.n))
    }
}

/// One `(row, seed, detector)` cell of the plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub row: usize,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub detector: DetectorKind,
    pub elapsed_secs: f64,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean, min, max })
    }
}

/// Metrics of one `(row, detector)` across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub row: usize,
    pub m: usize,
    pub n: usize,
    pub detector: DetectorKind,
    pub runs: usize,
    pub failures: usize,
    pub precision: Option<Spread>,
    pub recall: Option<Spread>,
    pub f_measure: Option<Spread>,
    pub mean_elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub plan: ExperimentPlan,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl BenchReport {
    pub fn aggregate(&self, row: usize, detector: DetectorKind) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.row == row && a.detector == detector)
    }

    /// One CSV line per run, for plotting.
    pub fn write_runs_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record([
            "row",
            "m",
            "n",
            "seed",
            "detector",
            "rule",
            "rule_value",
            "tp",
            "fp",
            "fn",
            "tn",
            "precision",
            "recall",
            "f_measure",
            "elapsed_secs",
            "error",
        ])?;
        for r in &self.runs {
            let mut rec = vec![
                r.row.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                r.seed.to_string(),
                r.detector.name().to_string(),
            ];
            match &r.report {
                Some(e) => {
                    let (rule, value) = match e.decision_rule {
                        DecisionRule::TopK(k) => ("top_k", k.to_string()),
                        DecisionRule::Threshold(t) => ("threshold", t.to_string()),
                    };
                    rec.extend([
                        rule.to_string(),
                        value,
                        e.tp.to_string(),
                        e.fp.to_string(),
                        e.fn_.to_string(),
                        e.tn.to_string(),
                        e.precision.to_string(),
                        e.recall.to_string(),
                        e.f_measure.to_string(),
                    ]);
                }
                None => rec.extend(std::iter::repeat_n(String::new(), 9)),
            }
            rec.push(r.elapsed_secs.to_string());
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Run one detector on a labelled dataset and evaluate it. PCD is judged on
/// its top `k` points; LOF on its best-F threshold.
pub fn run_detector(
    ds: &Dataset,
    detector: DetectorKind,
    cn: usize,
    schedule: &ProjectionSchedule,
    lof: &LofConfig,
) -> Result<EvalReport> {
    let labels = ds.labels().ok_or(Error::MissingLabels)?;
    let k = labels.iter().filter(|&&l| l).count();
    let report = match detector {
        DetectorKind::Pcd => {
            let table = score(ds, cn, schedule)?;
            evaluate(&table.si, labels, DecisionRule::TopK(k.max(1)))?
        }
        DetectorKind::Lof => {
            let scores = lof_scores(ds, lof)?;
            best_f_sweep(&scores, labels)?.1
        }
    };
    Ok(report.with_detector(detector.name()))
}

/// Execute every `(row, seed, detector)` cell. Failures are recorded in the
/// run and do not stop the plan.
pub fn run_plan(plan: &ExperimentPlan) -> Result<BenchReport> {
    plan.validate()?;
    let mut runs = Vec::new();
    for (row_idx, row) in plan.rows.iter().enumerate() {
        let cn = plan.cn_for(row);
        for &seed in &plan.seeds {
            let dataset = generate_highdim(&row.gen_spec(seed));
            for &detector in &plan.detectors {
                let start = Instant::now();
                let outcome = dataset.as_ref().map_err(|e| e.to_string()).and_then(|ds| {
                    run_detector(ds, detector, cn, &plan.schedule, &plan.lof)
                        .map_err(|e| e.to_string())
                });
                let elapsed_secs = start.elapsed().as_secs_f64();
                log_run(row, seed, detector, &outcome, elapsed_secs);
                let (report, error) = match outcome {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e)),
                };
                runs.push(RunRecord {
                    row: row_idx,
                    m: row.m,
                    n: row.n,
                    seed,
                    detector,
                    elapsed_secs,
                    report,
                    error,
                });
            }
        }
    }
    let aggregates = aggregate(plan, &runs);
    Ok(BenchReport {
        plan: plan.clone(),
        runs,
        aggregates,
    })
}

fn log_run(
    row: &PlanRow,
    seed: u64,
    detector: DetectorKind,
    outcome: &std::result::Result<EvalReport, String>,
    secs: f64,
) {
    match outcome {
        Ok(r) => eprintln!(
            "m={} n={} seed={} {}: P={:.4} R={:.4} F={:.4} ({secs:.2}s)",
            row.m,
            row.n,
            seed,
            detector.name(),
            r.precision,
            r.recall,
            r.f_measure
        ),
        Err(e) => eprintln!(
            "m={} n={} seed={} {}: failed: {e}",
            row.m,
            row.n,
            seed,
            detector.name()
        ),
    }
}

fn aggregate(plan: &ExperimentPlan, runs: &[RunRecord]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for (row_idx, row) in plan.rows.iter().enumerate() {
        for &detector in &plan.detectors {
            let cell: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.row == row_idx && r.detector == detector)
                .collect();
            let reports: Vec<&EvalReport> = cell.iter().filter_map(|r| r.report.as_ref()).collect();
            let metric = |f: fn(&EvalReport) -> f64| {
                Spread::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            out.push(Aggregate {
                row: row_idx,
                m: row.m,
                n: row.n,
                detector,
                runs: cell.len(),
                failures: cell.len() - reports.len(),
                precision: metric(|r| r.precision),
                recall: metric(|r| r.recall),
                f_measure: metric(|r| r.f_measure),
                mean_elapsed_secs: cell.iter().map(|r| r.elapsed_secs).sum::<f64>()
                    / cell.len().max(1) as f64,
            });
        }
    }
    out
}
