//! Local Outlier Factor baseline with exact Euclidean distances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Neighbourhood size used by the default experiments.
pub const DEFAULT_MIN_PTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LofConfig {
    pub min_pts: usize,
}

impl Default for LofConfig {
    fn default() -> Self {
        Self {
            min_pts: DEFAULT_MIN_PTS,
        }
    }
}

struct Neighbourhood {
    k_distance: f64,
    /// `(neighbour id, distance)`; every point within `k_distance`.
    members: Vec<(usize, f64)>,
}

/// Full symmetric Euclidean distance matrix, row-major.
fn distance_matrix(ds: &Dataset) -> Vec<f64> {
    let n = ds.n();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let row = ds.row(a);
            (a + 1..n)
                .map(|b| {
                    let d2: f64 = row
                        .iter()
                        .zip(ds.row(b))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum();
                    d2.sqrt()
                })
                .collect()
        })
        .collect();
    let mut dist = vec![0.0; n * n];
    for (a, row) in upper.into_iter().enumerate() {
        for (off, d) in row.into_iter().enumerate() {
            let b = a + 1 + off;
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    dist
}

fn neighbourhood(dist_row: &[f64], a: usize, min_pts: usize) -> Neighbourhood {
    let mut dist: Vec<(usize, f64)> = dist_row
        .iter()
        .enumerate()
        .filter(|&(b, _)| b != a)
        .map(|(b, &d)| (b, d))
        .collect();
    dist.select_nth_unstable_by(min_pts - 1, |x, y| x.1.total_cmp(&y.1));
    let k_distance = dist[min_pts - 1].1;
    let mut members: Vec<(usize, f64)> =
        dist.into_iter().filter(|&(_, d)| d <= k_distance).collect();
    members.sort_by_key(|&(b, _)| b);
    Neighbourhood {
        k_distance,
        members,
    }
}

/// LOF score of every point.
///
/// The neighbourhood of a point is every other point within its
/// `min_pts`-distance, so ties can make it larger than `min_pts`. A point
/// whose neighbours all coincide with it has infinite local reachability
/// density; two such points compare as equal (ratio 1), and a finite-density
/// point next to one gets a ratio capped at `f64::MAX`.
pub fn lof_scores(ds: &Dataset, cfg: &LofConfig) -> Result<Vec<f64>> {
    let n = ds.n();
    if cfg.min_pts == 0 || cfg.min_pts >= n {
        return Err(Error::invalid(format!(
            "min_pts must be between 1 and {}, got {}",
            n.saturating_sub(1),
            cfg.min_pts
        )));
    }

    let dist = distance_matrix(ds);
    let hoods: Vec<Neighbourhood> = dist
        .par_chunks(n)
        .enumerate()
        .map(|(a, row)| neighbourhood(row, a, cfg.min_pts))
        .collect();

    let lrd: Vec<f64> = hoods
        .iter()
        .map(|h| {
            let sum: f64 = h
                .members
                .iter()
                .map(|&(b, d)| hoods[b].k_distance.max(d))
                .sum();
            let mean = sum / h.members.len() as f64;
            if mean > 0.0 {
                1.0 / mean
            } else {
                f64::INFINITY
            }
        })
        .collect();

    Ok(hoods
        .iter()
        .enumerate()
        .map(|(a, h)| {
            let sum: f64 = h
                .members
                .iter()
                .map(|&(b, _)| density_ratio(lrd[b], lrd[a]))
                .sum();
            (sum / h.members.len() as f64).min(f64::MAX)
        })
        .collect())
}

fn density_ratio(neighbour: f64, own: f64) -> f64 {
    match (neighbour.is_infinite(), own.is_infinite()) {
        (true, true) => 1.0,
        (true, false) => f64::MAX,
        (false, true) => 0.0,
        (false, false) => (neighbour / own).min(f64::MAX),
    }
}
