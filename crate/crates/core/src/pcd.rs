//! The projected cell density scoring engine.
//!
//! Scoring runs in three passes over a [`GridIndex`]:
//!
//! 1. [`first_projection`]: every point takes, per dimension, the density of
//!    its cell divided by the mean density of the occupied cells.
//! 2. [`second_projection`]: for each scheduled `(source → target)` pair of
//!    dimensions, the members of every occupied source cell are projected onto
//!    the target dimension and weighted by [`project_cell`]'s cell-cluster
//!    ratio. Squared weights are accumulated per point.
//! 3. [`si_scores`]: both weight families are folded into one score.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::{build_grid, GridIndex};

/// Dimension count above which [`ScheduleMode::Auto`] switches to sampling.
pub const AUTO_FULL_MAX_DIMS: usize = 1000;

/// Default number of sampled rounds.
pub const DEFAULT_ROUNDS: usize = 5;

/// Source dimensions handled by one work unit of the second projection.
/// Fixed so that the reduction order never depends on the thread count.
const DIM_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    /// Every ordered pair of distinct dimensions.
    Full,
    /// `rounds` random permutations, each projecting every dimension onto
    /// its successor (the last wraps to the first).
    Sampled,
    /// `Full` up to [`AUTO_FULL_MAX_DIMS`] dimensions, `Sampled` above.
    Auto,
}

/// Which `(source → target)` dimension pairs the second projection visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionSchedule {
    pub mode: ScheduleMode,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for ProjectionSchedule {
    fn default() -> Self {
        Self::auto(0)
    }
}

impl ProjectionSchedule {
    pub fn full() -> Self {
        Self {
            mode: ScheduleMode::Full,
            rounds: DEFAULT_ROUNDS,
            seed: 0,
        }
    }

    pub fn sampled(rounds: usize, seed: u64) -> Self {
        Self {
            mode: ScheduleMode::Sampled,
            rounds,
            seed,
        }
    }

    pub fn auto(seed: u64) -> Self {
        Self {
            mode: ScheduleMode::Auto,
            rounds: DEFAULT_ROUNDS,
            seed,
        }
    }

    /// The concrete mode used for `m` dimensions.
    pub fn resolve(&self, m: usize) -> ScheduleMode {
        match self.mode {
            ScheduleMode::Auto if m <= AUTO_FULL_MAX_DIMS => ScheduleMode::Full,
            ScheduleMode::Auto => ScheduleMode::Sampled,
            mode => mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode != ScheduleMode::Full && self.rounds == 0 {
            return Err(Error::invalid("sampled schedule needs at least one round"));
        }
        Ok(())
    }

    /// Number of projections each point receives for `m` dimensions.
    pub fn pair_count(&self, m: usize) -> usize {
        if m < 2 {
            return 0;
        }
        match self.resolve(m) {
            ScheduleMode::Full => m * (m - 1),
            _ => self.rounds * m,
        }
    }

    /// Target dimensions for every source dimension, in visiting order.
    pub fn targets(&self, m: usize) -> Vec<Vec<usize>> {
        let mut targets = vec![Vec::new(); m];
        if m < 2 {
            return targets;
        }
        match self.resolve(m) {
            ScheduleMode::Full => {
                for (i, t) in targets.iter_mut().enumerate() {
                    t.extend((0..m).filter(|&k| k != i));
                }
            }
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                for _ in 0..self.rounds {
                    let mut perm: Vec<usize> = (0..m).collect();
                    perm.shuffle(&mut rng);
                    for t in 0..m {
                        targets[perm[t]].push(perm[(t + 1) % m]);
                    }
                }
            }
        }
        targets
    }
}

/// First-projection weights, one block of `n` values per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PtValTable {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl PtValTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self, dim: usize) -> &[f64] {
        &self.values[dim * self.n..(dim + 1) * self.n]
    }

    pub fn get(&self, dim: usize, point: usize) -> f64 {
        self.values[dim * self.n + point]
    }
}

/// First projection: cell density over mean occupied-cell density.
pub fn first_projection(grid: &GridIndex) -> PtValTable {
    let (n, m) = (grid.n(), grid.m());
    let mut values = Vec::with_capacity(n * m);
    for dim in 0..m {
        let avg = grid.avg_density(dim);
        let counts = grid.counts(dim);
        values.extend(
            grid.cells(dim)
                .iter()
                .map(|&c| counts[c as usize] as f64 / avg),
        );
    }
    PtValTable { n, m, values }
}

/// Reusable scratch space for projecting one cell's members onto a target
/// dimension.
struct CellProjector {
    counts: Vec<u32>,
    occupied: Vec<u64>,
    weight: Vec<f64>,
}

impl CellProjector {
    fn new(cn: usize) -> Self {
        Self {
            counts: vec![0; cn],
            occupied: vec![0; cn.div_ceil(64)],
            weight: vec![0.0; cn],
        }
    }

    /// Calls `emit(point, weight)` for every member, in member order.
    ///
    /// A member in target cell `c` gets `count(c) * run(c) / mean`, where
    /// `run(c)` is the length of the run of consecutive occupied cells that
    /// contains `c`, and `mean` is the average of `count * run` over the
    /// distinct occupied cells.
    fn project(&mut self, members: &[u32], target: &[u32], mut emit: impl FnMut(u32, f64)) {
        for &p in members {
            let c = target[p as usize] as usize;
            self.counts[c] += 1;
            self.occupied[c / 64] |= 1 << (c % 64);
        }

        let mut total = 0.0;
        let mut distinct = 0usize;
        let mut run_start = usize::MAX;
        let mut prev = usize::MAX;
        let mut close_run = |start: usize, end: usize, this: &mut Self| {
            let len = (end - start + 1) as f64;
            for c in start..=end {
                let w = this.counts[c] as f64 * len;
                this.weight[c] = w;
                total += w;
            }
            distinct += end - start + 1;
        };
        for w in 0..self.occupied.len() {
            let mut word = self.occupied[w];
            while word != 0 {
                let c = w * 64 + word.trailing_zeros() as usize;
                word &= word - 1;
                if run_start == usize::MAX {
                    run_start = c;
                } else if c != prev + 1 {
                    close_run(run_start, prev, self);
                    run_start = c;
                }
                prev = c;
            }
        }
        if run_start != usize::MAX {
            close_run(run_start, prev, self);
        }

        let mean = total / distinct as f64;
        for &p in members {
            let c = target[p as usize] as usize;
            emit(p, self.weight[c] / mean);
        }

        for w in 0..self.occupied.len() {
            let mut word = self.occupied[w];
            while word != 0 {
                self.counts[w * 64 + word.trailing_zeros() as usize] = 0;
                word &= word - 1;
            }
            self.occupied[w] = 0;
        }
    }
}

/// Second-projection weights of the members of one source cell projected
/// onto `target_dim`, as `(point id, weight)` in ascending point id.
pub fn project_cell(
    grid: &GridIndex,
    source_dim: usize,
    source_cell: usize,
    target_dim: usize,
) -> Result<Vec<(usize, f64)>> {
    let m = grid.m();
    if source_dim >= m || target_dim >= m {
        return Err(Error::invalid("dimension out of range"));
    }
    if source_dim == target_dim {
        return Err(Error::invalid("source and target dimension must differ"));
    }
    if source_cell >= grid.cn() || grid.count(source_dim, source_cell) == 0 {
        return Err(Error::invalid(format!(
            "cell {source_cell} of dimension {source_dim} is empty"
        )));
    }
    let members: Vec<u32> = grid
        .cells(source_dim)
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c as usize == source_cell)
        .map(|(p, _)| p as u32)
        .collect();
    let mut out = Vec::with_capacity(members.len());
    CellProjector::new(grid.cn()).project(&members, grid.cells(target_dim), |p, w| {
        out.push((p as usize, w))
    });
    Ok(out)
}

/// Per-point sums of squared second-projection weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionAccumulators {
    pub sumsq: Vec<f64>,
    pub count: Vec<u64>,
}

/// Run every scheduled projection and accumulate squared weights per point.
///
/// Work is split into fixed chunks of source dimensions; each chunk sums
/// its pairs in schedule order, and chunk results are added in dimension
/// order, so results are bit-identical for any thread count.
pub fn second_projection(
    grid: &GridIndex,
    schedule: &ProjectionSchedule,
) -> Result<ProjectionAccumulators> {
    schedule.validate()?;
    let (n, m, cn) = (grid.n(), grid.m(), grid.cn());
    let targets = schedule.targets(m);
    let dims: Vec<usize> = (0..m).collect();

    let partials: Vec<(Vec<f64>, Vec<u64>)> = dims
        .par_chunks(DIM_CHUNK)
        .map(|chunk| {
            let mut sumsq = vec![0.0f64; n];
            let mut count = vec![0u64; n];
            let mut projector = CellProjector::new(cn);
            for &src in chunk {
                if targets[src].is_empty() {
                    continue;
                }
                let (members, offsets) = grid.members_by_cell(src);
                for &dst in &targets[src] {
                    let target = grid.cells(dst);
                    for cell in offsets.windows(2) {
                        if cell[0] == cell[1] {
                            continue;
                        }
                        projector.project(&members[cell[0]..cell[1]], target, |p, w| {
                            sumsq[p as usize] += w * w;
                            count[p as usize] += 1;
                        });
                    }
                }
            }
            (sumsq, count)
        })
        .collect();

    let mut acc = ProjectionAccumulators {
        sumsq: vec![0.0; n],
        count: vec![0; n],
    };
    for (sumsq, count) in partials {
        for (a, s) in acc.sumsq.iter_mut().zip(sumsq) {
            *a += s;
        }
        for (a, c) in acc.count.iter_mut().zip(count) {
            *a += c;
        }
    }
    Ok(acc)
}

/// Combine both weight families into one score per point:
///
/// `SI = 2m / (Σ_i PtVal² + (m / count) · Σ PtValp²)`
///
/// The second term averages the squared projection weights back to a
/// per-dimension contribution, so a point whose weights are all 1 scores
/// exactly 1. With no projections (a single dimension) the score reduces
/// to `m / Σ_i PtVal²`.
pub fn si_scores(pt_val: &PtValTable, acc: &ProjectionAccumulators) -> Vec<f64> {
    let (n, m) = (pt_val.n(), pt_val.m());
    let mut first = vec![0.0f64; n];
    for dim in 0..m {
        for (f, v) in first.iter_mut().zip(pt_val.dim(dim)) {
            *f += v * v;
        }
    }
    first
        .iter()
        .zip(acc.sumsq.iter().zip(&acc.count))
        .map(|(&f, (&s, &c))| {
            if c == 0 {
                m as f64 / f
            } else {
                2.0 * m as f64 / (f + m as f64 * s / c as f64)
            }
        })
        .collect()
}

/// All intermediate tables of one scoring run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub pt_val: PtValTable,
    pub ptp_sumsq: Vec<f64>,
    pub ptp_count: Vec<u64>,
    pub si: Vec<f64>,
}

/// Score every point of `ds`.
pub fn score(ds: &Dataset, cn: usize, schedule: &ProjectionSchedule) -> Result<ScoreTable> {
    let grid = build_grid(ds, cn)?;
    score_grid(&grid, schedule)
}

pub fn score_grid(grid: &GridIndex, schedule: &ProjectionSchedule) -> Result<ScoreTable> {
    let pt_val = first_projection(grid);
    let acc = second_projection(grid, schedule)?;
    let si = si_scores(&pt_val, &acc);
    Ok(ScoreTable {
        pt_val,
        ptp_sumsq: acc.sumsq,
        ptp_count: acc.count,
        si,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedPoint {
    pub id: usize,
    pub score: f64,
}

/// Points ranked by decreasing score (ties by ascending id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub ranking: Vec<RankedPoint>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl DetectionResult {
    pub fn from_scores(scores: &[f64], k: usize, threshold: Option<f64>) -> Self {
        let ranking = rank(scores)
            .into_iter()
            .map(|id| RankedPoint {
                id,
                score: scores[id],
            })
            .collect();
        Self {
            ranking,
            k,
            threshold,
        }
    }

    /// Ids of the top `k` points.
    pub fn top_k(&self) -> Vec<usize> {
        self.ranking.iter().take(self.k).map(|r| r.id).collect()
    }

    /// Scores indexed by point id.
    pub fn scores(&self) -> Vec<f64> {
        let mut scores = vec![0.0; self.ranking.len()];
        for r in &self.ranking {
            scores[r.id] = r.score;
        }
        scores
    }
}

/// Point ids sorted by decreasing score, ties broken by ascending id.
pub fn rank(scores: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..scores.len()).collect();
    ids.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ids
}

/// Score `ds` and rank all points; the first `k` entries are the detected
/// outliers.
pub fn detect(
    ds: &Dataset,
    cn: usize,
    schedule: &ProjectionSchedule,
    k: usize,
) -> Result<DetectionResult> {
    if k == 0 || k > ds.n() {
        return Err(Error::invalid(format!(
            "k must be between 1 and {}, got {k}",
            ds.n()
        )));
    }
    let table = score(ds, cn, schedule)?;
    Ok(DetectionResult::from_scores(&table.si, k, None))
}
