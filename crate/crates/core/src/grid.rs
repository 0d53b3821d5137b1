//! Equal-width cell decomposition of every dimension.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{Dataset, Interval};
use crate::error::{Error, Result};

/// Cell count and binning range of each dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub cn: usize,
    pub ranges: Vec<Interval>,
}

impl GridConfig {
    /// Binning ranges taken from the per-dimension data minimum and maximum.
    pub fn from_data(ds: &Dataset, cn: usize) -> Result<Self> {
        if cn == 0 {
            return Err(Error::invalid("cell count must be at least 1"));
        }
        let ranges = (0..ds.m())
            .map(|dim| {
                let (lo, hi) = ds
                    .column(dim)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                Interval::new(lo, hi)
            })
            .collect();
        Ok(Self { cn, ranges })
    }

    /// Cell of value `v` in dimension `dim`. Values at or above the range
    /// maximum land in the last cell; a zero-width range puts everything in
    /// cell 0.
    pub fn cell_for(&self, dim: usize, v: f64) -> u32 {
        let Interval { lo, hi } = self.ranges[dim];
        let span = hi - lo;
        if span <= 0.0 || v <= lo {
            return 0;
        }
        // (v - lo) / (span / cn), arranged so that exact boundaries stay exact.
        let pos = ((v - lo) * self.cn as f64 / span).floor();
        (pos as usize).min(self.cn - 1) as u32
    }
}

/// Point-to-cell assignment and cell occupancy for every dimension.
///
/// `cell_of` and `count` are stored flat, one contiguous block per dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridIndex {
    config: GridConfig,
    n: usize,
    m: usize,
    cell_of: Vec<u32>,
    count: Vec<u32>,
    avg_density: Vec<f64>,
}

impl GridIndex {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cn(&self) -> usize {
        self.config.cn
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    /// Cell id of every point in dimension `dim`.
    pub fn cells(&self, dim: usize) -> &[u32] {
        &self.cell_of[dim * self.n..(dim + 1) * self.n]
    }

    pub fn cell_of(&self, dim: usize, point: usize) -> usize {
        self.cell_of[dim * self.n + point] as usize
    }

    /// Occupancy of every cell of dimension `dim`.
    pub fn counts(&self, dim: usize) -> &[u32] {
        let cn = self.config.cn;
        &self.count[dim * cn..(dim + 1) * cn]
    }

    pub fn count(&self, dim: usize, cell: usize) -> usize {
        self.counts(dim)[cell] as usize
    }

    /// Mean occupancy over the non-empty cells of `dim`.
    pub fn avg_density(&self, dim: usize) -> f64 {
        self.avg_density[dim]
    }

    pub fn occupied_cells(&self, dim: usize) -> usize {
        self.counts(dim).iter().filter(|&&c| c > 0).count()
    }

    /// Point ids of dimension `dim`, grouped by cell in ascending cell order
    /// (ascending point id within a cell), with the start offset of every
    /// cell. `offsets` has `cn + 1` entries.
    pub fn members_by_cell(&self, dim: usize) -> (Vec<u32>, Vec<usize>) {
        let cn = self.config.cn;
        let mut offsets = vec![0usize; cn + 1];
        for (cell, &c) in self.counts(dim).iter().enumerate() {
            offsets[cell + 1] = offsets[cell] + c as usize;
        }
        let mut cursor = offsets.clone();
        let mut members = vec![0u32; self.n];
        for (point, &cell) in self.cells(dim).iter().enumerate() {
            let slot = &mut cursor[cell as usize];
            members[*slot] = point as u32;
            *slot += 1;
        }
        (members, offsets)
    }
}

/// Suggested cell count: `ceil(sqrt(n))`.
pub fn default_cn(n: usize) -> usize {
    let r = (n as f64).sqrt().ceil() as usize;
    // Guard against floating error around perfect squares.
    let r = if r > 0 && (r - 1) * (r - 1) >= n {
        r - 1
    } else {
        r
    };
    let r = if r * r < n { r + 1 } else { r };
    r.max(1)
}

/// Bin every dimension of `ds` into `cn` equal-width cells spanning the data
/// range of that dimension.
pub fn build_grid(ds: &Dataset, cn: usize) -> Result<GridIndex> {
    let config = GridConfig::from_data(ds, cn)?;
    build_grid_with(ds, config)
}

/// Bin with explicit ranges. Values outside a range clamp to its end cells.
pub fn build_grid_with(ds: &Dataset, config: GridConfig) -> Result<GridIndex> {
    if config.cn == 0 {
        return Err(Error::invalid("cell count must be at least 1"));
    }
    if config.ranges.len() != ds.m() {
        return Err(Error::invalid(format!(
            "grid has {} ranges for {} dimensions",
            config.ranges.len(),
            ds.m()
        )));
    }
    if config
        .ranges
        .iter()
        .any(|r| !r.lo.is_finite() || !r.hi.is_finite() || r.lo > r.hi)
    {
        return Err(Error::invalid(
            "grid ranges must be finite with minimum <= maximum",
        ));
    }
    if config.cn > u32::MAX as usize {
        return Err(Error::invalid("cell count too large"));
    }

    let (n, m, cn) = (ds.n(), ds.m(), config.cn);
    let per_dim: Vec<(Vec<u32>, Vec<u32>, f64)> = (0..m)
        .into_par_iter()
        .map(|dim| {
            let cells: Vec<u32> = ds.column(dim).map(|v| config.cell_for(dim, v)).collect();
            let mut count = vec![0u32; cn];
            for &c in &cells {
                count[c as usize] += 1;
            }
            let occupied = count.iter().filter(|&&c| c > 0).count();
            (cells, count, n as f64 / occupied as f64)
        })
        .collect();

    let mut cell_of = Vec::with_capacity(n * m);
    let mut count = Vec::with_capacity(cn * m);
    let mut avg_density = Vec::with_capacity(m);
    for (cells, c, avg) in per_dim {
        debug_assert_eq!(c.iter().map(|&x| x as usize).sum::<usize>(), n);
        cell_of.extend(cells);
        count.extend(c);
        avg_density.push(avg);
    }
    Ok(GridIndex {
        config,
        n,
        m,
        cell_of,
        count,
        avg_density,
    })
}
