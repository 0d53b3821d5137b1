//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion, and exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use pcd::dataset::{generate_2d, generate_highdim, Dataset, GenSpec};
use pcd::eval::{best_f_sweep, evaluate, DecisionRule};
use pcd::grid::build_grid;
use pcd::lof::{lof_scores, LofConfig};
use pcd::pcd::{detect, first_projection, project_cell, score, ProjectionSchedule, ScheduleMode};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const SEEDS: [u64; 3] = [1, 2, 3];

/// Datasets of the high-dimensional experiment, with outliers drawn from
/// `[20, 100]`.
fn experiment_spec(m: usize, n: usize, seed: u64) -> GenSpec {
    GenSpec {
        outlier_range: GenSpec::WIDE_OUTLIER_RANGE,
        ..GenSpec::new(m, n, seed)
    }
}

fn experiment_cn(n: usize) -> usize {
    if n == 500 {
        25
    } else {
        35
    }
}

struct RowResult {
    m: usize,
    n: usize,
    pcd_f: Vec<f64>,
    lof_f: Vec<f64>,
    pcd_time: Duration,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn run_row(m: usize, n: usize, schedule_for: impl Fn(u64) -> ProjectionSchedule) -> RowResult {
    let mut res = RowResult {
        m,
        n,
        pcd_f: Vec::new(),
        lof_f: Vec::new(),
        pcd_time: Duration::ZERO,
    };
    for seed in SEEDS {
        let ds = generate_highdim(&experiment_spec(m, n, seed)).unwrap();
        let labels = ds.labels().unwrap();
        let start = Instant::now();
        let si = score(&ds, experiment_cn(n), &schedule_for(seed))
            .unwrap()
            .si;
        res.pcd_time += start.elapsed();
        let pcd = evaluate(&si, labels, DecisionRule::TopK(10)).unwrap();
        let lof = lof_scores(&ds, &LofConfig::default()).unwrap();
        let (_, lof) = best_f_sweep(&lof, labels).unwrap();
        println!(
            "    m={m:<5} n={n:<4} seed={seed}: pcd F={:.4}  lof F={:.4}",
            pcd.f_measure, lof.f_measure
        );
        res.pcd_f.push(pcd.f_measure);
        res.lof_f.push(lof.f_measure);
    }
    res
}

fn c1_worked_example() -> Outcome {
    let start = Instant::now();
    let ds = worked_example_dataset();
    let grid = build_grid(&ds, 5).map_err(|e| e.to_string())?;
    let pt = first_projection(&grid);
    let proj = project_cell(&grid, 1, 2, 4).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let cell_vals: Vec<f64> = (0..5).map(|j| pt.get(1, j)).collect();
    let weights: Vec<f64> = proj.iter().map(|&(_, w)| w).collect();
    let expected = [1.0 / 3.0, 2.0, 2.0, 2.0, 2.0 / 3.0];
    let ok = cell_vals.iter().all(|&v| v == 2.5)
        && weights.len() == 5
        && weights
            .iter()
            .zip(expected)
            .all(|(w, e)| (w - e).abs() < 1e-9)
        && elapsed < Duration::from_millis(1);
    check(
        ok,
        format!("CellVal={cell_vals:?} CellValp={weights:.4?} in {elapsed:?}"),
    )
}

/// Groups of identical points, one group per cell in every dimension, so
/// all cells hold the same count and every projection stays in one cell.
fn calibration_dataset(groups: usize, size: usize, m: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let layouts: Vec<Vec<usize>> = (0..m)
        .map(|_| {
            let mut p: Vec<usize> = (0..groups).collect();
            p.shuffle(&mut r);
            p
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..groups * size)
        .map(|j| {
            (0..m)
                .map(|d| layouts[d][j % groups] as f64 * 3.0)
                .collect()
        })
        .collect();
    Dataset::from_rows(&rows).unwrap()
}

fn c2_calibration() -> Outcome {
    let cases = [(4, 3, 3), (5, 2, 6), (7, 4, 2), (3, 10, 8)];
    for (i, &(groups, size, m)) in cases.iter().enumerate() {
        let ds = calibration_dataset(groups, size, m, i as u64);
        for schedule in [
            ProjectionSchedule::full(),
            ProjectionSchedule::sampled(5, 1),
        ] {
            let t = score(&ds, groups, &schedule).map_err(|e| e.to_string())?;
            if let Some(bad) = t.si.iter().find(|&&s| s != 1.0) {
                return Err(format!("groups={groups} m={m}: SI {bad} != 1"));
            }
        }
    }
    Ok(format!(
        "{} layouts, full and sampled: every SI == 1",
        cases.len()
    ))
}

fn c3_two_dimensional() -> Outcome {
    let mut perfect = 0;
    let mut slowest = Duration::ZERO;
    for seed in 0..10 {
        let ds = generate_2d(seed);
        let start = Instant::now();
        let result = detect(&ds, 7, &ProjectionSchedule::full(), 3).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        let r = evaluate(
            &result.scores(),
            ds.labels().unwrap(),
            DecisionRule::TopK(3),
        )
        .map_err(|e| e.to_string())?;
        if r.precision == 1.0 && r.recall == 1.0 {
            perfect += 1;
        }
    }
    check(
        perfect >= 9 && slowest < Duration::from_secs(1),
        format!("{perfect}/10 seeds with P=R=1, slowest {slowest:?}"),
    )
}

fn c4_high_dimensional(rows: &[RowResult], total: Duration) -> Outcome {
    let mut fails = Vec::new();
    let mut summary = Vec::new();
    for r in rows.iter().filter(|r| r.m <= 1000) {
        let f = mean(&r.pcd_f);
        let need = if r.m >= 500 { 0.95 } else { 0.80 };
        summary.push(format!("({},{}) F={f:.3}", r.m, r.n));
        if f < need {
            fails.push(format!("({},{}) F={f:.3} < {need}", r.m, r.n));
        }
    }
    if total > Duration::from_secs(600) {
        fails.push(format!("runtime {total:?} over 10 min"));
    }
    let detail = format!("{} in {total:.1?}", summary.join(" "));
    if fails.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; failing: {}", fails.join(", ")))
    }
}

fn c5_extreme_dimension(row: &RowResult, total: Duration) -> Outcome {
    let f = mean(&row.pcd_f);
    check(
        f >= 0.90 && total <= Duration::from_secs(900),
        format!(
            "(10000,1000) sampled r=5: mean F={f:.3}, pcd {:.1?}, total {total:.1?}",
            row.pcd_time
        ),
    )
}

fn c6_lof_comparison(rows: &[RowResult]) -> Outcome {
    let mut fails = Vec::new();
    let mut summary = Vec::new();
    for r in rows.iter().filter(|r| r.m >= 100) {
        let (p, l) = (mean(&r.pcd_f), mean(&r.lof_f));
        summary.push(format!("({},{}) pcd={p:.3} lof={l:.3}", r.m, r.n));
        if r.m >= 500 && l > 0.35 {
            fails.push(format!("({},{}) lof F={l:.3} > 0.35", r.m, r.n));
        }
        if p <= l {
            fails.push(format!("({},{}) pcd {p:.3} <= lof {l:.3}", r.m, r.n));
        }
    }
    let detail = summary.join(" ");
    if fails.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; failing: {}", fails.join(", ")))
    }
}

fn c7_oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let mut r = rng(7000 + seed);
        let n = r.random_range(5..=100);
        let m = r.random_range(2..=10);
        let cn = r.random_range(2..=12);
        let rows = random_rows(&mut r, n, m);
        let ds = Dataset::from_rows(&rows).unwrap();
        let got = detect(&ds, cn, &ProjectionSchedule::full(), 1)
            .map_err(|e| e.to_string())?
            .scores();
        for (a, b) in got.iter().zip(naive_si(&rows, cn)) {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    check(
        worst <= 1e-9,
        format!("50 instances, worst relative error {worst:.2e}"),
    )
}

fn c8_invariants() -> Outcome {
    let mut r = rng(88);
    for case in 0..20 {
        let n = r.random_range(10..=120);
        let m = r.random_range(2..=6);
        let cn = r.random_range(2..=12);
        let rows = random_rows(&mut r, n, m);
        let ds = Dataset::from_rows(&rows).unwrap();
        let grid = build_grid(&ds, cn).unwrap();
        let fail = |what: &str| Err(format!("case {case}: {what}"));

        // Grid conservation and occupied-cell normalisation.
        let pt = first_projection(&grid);
        for d in 0..m {
            if grid.counts(d).iter().sum::<u32>() as usize != n {
                return fail("counts do not sum to n");
            }
            let mut per_cell = vec![None; cn];
            for j in 0..n {
                per_cell[grid.cell_of(d, j)] = Some(pt.get(d, j));
            }
            let vals: Vec<f64> = per_cell.into_iter().flatten().collect();
            if (mean(&vals) - 1.0).abs() > 1e-12 {
                return fail("occupied CellVal mean != 1");
            }
        }

        // Per-call projection normalisation.
        for cell in (0..cn).filter(|&c| grid.count(0, c) > 0) {
            let mut per_cell = vec![None; cn];
            for (p, w) in project_cell(&grid, 0, cell, 1).unwrap() {
                per_cell[grid.cell_of(1, p)] = Some(w);
            }
            let vals: Vec<f64> = per_cell.into_iter().flatten().collect();
            if (mean(&vals) - 1.0).abs() > 1e-12 {
                return fail("projected cell mean != 1");
            }
        }

        // Weight count m² per point.
        let full = score(&ds, cn, &ProjectionSchedule::full()).unwrap();
        if full.ptp_count.iter().any(|&c| c as usize + m != m * m) {
            return fail("weight count != m²");
        }

        // Positive affine maps on a dyadic lattice are exact.
        let lattice: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| row.iter().map(|v| (v * 8.0).round() / 8.0).collect())
            .collect();
        let moved: Vec<Vec<f64>> = lattice
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(d, v)| v * 2f64.powi(d as i32 - 2) + (d * 17) as f64)
                    .collect()
            })
            .collect();
        let a = score(
            &Dataset::from_rows(&lattice).unwrap(),
            cn,
            &ProjectionSchedule::full(),
        );
        let b = score(
            &Dataset::from_rows(&moved).unwrap(),
            cn,
            &ProjectionSchedule::full(),
        );
        if a.unwrap().si != b.unwrap().si {
            return fail("affine map changed SI");
        }

        // Point permutation.
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&j| rows[j].clone()).collect();
        let s2 = score(
            &Dataset::from_rows(&shuffled).unwrap(),
            cn,
            &ProjectionSchedule::full(),
        )
        .unwrap()
        .si;
        if perm
            .iter()
            .enumerate()
            .any(|(pos, &j)| s2[pos] != full.si[j])
        {
            return fail("row permutation changed SI");
        }

        // LOF against brute force.
        if n <= 200 {
            let min_pts = r.random_range(1..n.min(12));
            let got = lof_scores(&ds, &LofConfig { min_pts }).unwrap();
            if got
                .iter()
                .zip(naive_lof(&rows, min_pts))
                .any(|(a, b)| !rel_close(*a, b, 1e-9))
            {
                return fail("LOF differs from brute force");
            }
        }
    }

    // Seeded paths at different thread counts.
    let spec = GenSpec::new(30, 150, 5);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let ds = generate_highdim(&spec).unwrap();
                (
                    score(&ds, 12, &ProjectionSchedule::full()).unwrap().si,
                    score(&ds, 12, &ProjectionSchedule::sampled(5, 9))
                        .unwrap()
                        .si,
                    lof_scores(&ds, &LofConfig::default()).unwrap(),
                    ds,
                )
            })
    };
    let base = run(1);
    for t in [2, 4, 7] {
        if run(t) != base {
            return Err(format!("results differ with {t} threads"));
        }
    }
    Ok("20 random instances + thread counts {1,2,4,7}: all invariants hold".into())
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("C1 worked example", c1_worked_example()),
        ("C2 calibration", c2_calibration()),
        ("C3 two-dimensional experiment", c3_two_dimensional()),
    ];

    println!("  running the high-dimensional experiment (3 seeds per row)...");
    let start = Instant::now();
    let rows: Vec<RowResult> = [
        (100, 500),
        (100, 1000),
        (500, 500),
        (500, 1000),
        (1000, 500),
        (1000, 1000),
    ]
    .into_iter()
    .map(|(m, n)| run_row(m, n, |_| ProjectionSchedule::full()))
    .collect();
    let table_time = start.elapsed();
    let start = Instant::now();
    let extreme = run_row(10000, 1000, |seed| {
        let s = ProjectionSchedule::sampled(5, seed);
        assert_eq!(s.resolve(10000), ScheduleMode::Sampled);
        s
    });
    let extreme_time = start.elapsed();

    results.push((
        "C4 high-dimensional accuracy",
        c4_high_dimensional(&rows, table_time),
    ));
    results.push((
        "C5 extreme dimension",
        c5_extreme_dimension(&extreme, extreme_time),
    ));
    let mut all_rows = rows;
    all_rows.push(extreme);
    results.push((
        "C6 LOF degradation and dominance",
        c6_lof_comparison(&all_rows),
    ));
    results.push(("C7 oracle equivalence", c7_oracle_equivalence()));
    results.push(("C8 invariant suite", c8_invariants()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
