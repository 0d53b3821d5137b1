//! Independent reference implementations used as test oracles.
//!
//! Everything here works on plain `Vec<Vec<f64>>` rows and recomputes from
//! the definitions with straightforward loops; nothing calls into the
//! library's scoring paths.

#![allow(dead_code)]

use pcd::dataset::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rows_of(ds: &Dataset) -> Vec<Vec<f64>> {
    ds.rows().map(|r| r.to_vec()).collect()
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(-50.0..50.0)).collect())
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct equal-width binning: width `(max - min) / cn`, cell
/// `floor((v - min) / width)`, last cell for the maximum.
pub fn naive_cells(rows: &[Vec<f64>], cn: usize) -> Vec<Vec<usize>> {
    let m = rows[0].len();
    (0..m)
        .map(|i| {
            let min = rows.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min);
            let max = rows.iter().map(|r| r[i]).fold(f64::NEG_INFINITY, f64::max);
            let width = (max - min) / cn as f64;
            rows.iter()
                .map(|r| {
                    if width == 0.0 {
                        0
                    } else {
                        let c = ((r[i] - min) / width).floor() as usize;
                        c.min(cn - 1)
                    }
                })
                .collect()
        })
        .collect()
}

/// First-projection weight of every point: `ptval[dim][point]`.
pub fn naive_ptval(cells: &[Vec<usize>], cn: usize) -> Vec<Vec<f64>> {
    cells
        .iter()
        .map(|dim| {
            let n = dim.len();
            let mut count = vec![0usize; cn];
            for &c in dim {
                count[c] += 1;
            }
            let nonempty = count.iter().filter(|&&c| c > 0).count();
            let avg = n as f64 / nonempty as f64;
            dim.iter().map(|&c| count[c] as f64 / avg).collect()
        })
        .collect()
}

/// Second-projection weights for the members `s` of one source cell,
/// projected with `target` cell ids. Returns weights in the order of `s`.
///
/// Cluster lengths come from scanning left and right of each occupied cell.
pub fn naive_project(s: &[usize], target: &[usize]) -> Vec<f64> {
    let cells: Vec<usize> = s.iter().map(|&j| target[j]).collect();
    let cellnum = |c: usize| cells.iter().filter(|&&x| x == c).count() as f64;
    let occupied = |c: isize| c >= 0 && cells.contains(&(c as usize));
    let clulen = |c: usize| {
        let mut len = 1.0;
        let mut l = c as isize - 1;
        while occupied(l) {
            len += 1.0;
            l -= 1;
        }
        let mut r = c as isize + 1;
        while occupied(r) {
            len += 1.0;
            r += 1;
        }
        len
    };
    let mut distinct = cells.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let denom = distinct
        .iter()
        .map(|&c| cellnum(c) * clulen(c))
        .sum::<f64>()
        / distinct.len() as f64;
    cells
        .iter()
        .map(|&c| cellnum(c) * clulen(c) / denom)
        .collect()
}

/// Members of `cell` in dimension `dim`, ascending point id.
pub fn members(cells: &[Vec<usize>], dim: usize, cell: usize) -> Vec<usize> {
    (0..cells[dim].len())
        .filter(|&j| cells[dim][j] == cell)
        .collect()
}

/// Full-schedule scores, transcribing the three formulas one point at a time.
pub fn naive_si(rows: &[Vec<f64>], cn: usize) -> Vec<f64> {
    let n = rows.len();
    let m = rows[0].len();
    let cells = naive_cells(rows, cn);
    let ptval = naive_ptval(&cells, cn);
    (0..n)
        .map(|j| {
            let mut denom = 0.0;
            for i in 0..m {
                let s = members(&cells, i, cells[i][j]);
                let pos = s.iter().position(|&x| x == j).unwrap();
                let mut second = 0.0;
                for k in (0..m).filter(|&k| k != i) {
                    let w = naive_project(&s, &cells[k])[pos];
                    second += w * w;
                }
                denom += ptval[i][j].powi(2) + second / (m - 1) as f64;
            }
            2.0 * m as f64 / denom
        })
        .collect()
}

/// Textbook LOF with sorted neighbour lists.
pub fn naive_lof(rows: &[Vec<f64>], min_pts: usize) -> Vec<f64> {
    let n = rows.len();
    let d = |a: usize, b: usize| -> f64 {
        rows[a]
            .iter()
            .zip(&rows[b])
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let kdist: Vec<f64> = (0..n)
        .map(|a| {
            let mut ds: Vec<f64> = (0..n).filter(|&b| b != a).map(|b| d(a, b)).collect();
            ds.sort_by(f64::total_cmp);
            ds[min_pts - 1]
        })
        .collect();
    let hood: Vec<Vec<usize>> = (0..n)
        .map(|a| (0..n).filter(|&b| b != a && d(a, b) <= kdist[a]).collect())
        .collect();
    let lrd: Vec<f64> = (0..n)
        .map(|a| {
            let mean =
                hood[a].iter().map(|&b| kdist[b].max(d(a, b))).sum::<f64>() / hood[a].len() as f64;
            1.0 / mean
        })
        .collect();
    (0..n)
        .map(|a| hood[a].iter().map(|&b| lrd[b] / lrd[a]).sum::<f64>() / hood[a].len() as f64)
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// The worked grid example: 10 points, 5 dimensions, 5 cells per dimension.
///
/// In the second dimension (index 1) points 0..5 share the third cell, and
/// the cell occupancies are {1, 1, 5, 2, 1}. In the fifth dimension (index
/// 4) those five points land in the second, fourth and fifth cells with
/// 1, 3 and 1 members.
pub fn worked_example_dataset() -> Dataset {
    let dim1 = [2.0, 2.0, 2.0, 2.0, 2.0, 0.0, 1.0, 3.0, 3.0, 4.0];
    let dim4 = [1.0, 3.0, 3.0, 3.0, 4.0, 0.0, 0.0, 2.0, 2.0, 1.0];
    let rows: Vec<Vec<f64>> = (0..10)
        .map(|j| {
            let filler = (j % 5) as f64;
            vec![filler, dim1[j], (4 - j % 5) as f64, filler, dim4[j]]
        })
        .collect();
    Dataset::from_rows(&rows).unwrap()
}
