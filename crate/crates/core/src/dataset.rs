//! Point tables, CSV ingestion and the synthetic inner-outlier generators.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n × m` table of finite values, stored row-major, with optional
/// ground-truth outlier flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    m: usize,
    labels: Option<Vec<bool>>,
}

impl Dataset {
    /// Build a dataset from row-major values.
    pub fn new(values: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidDataset(format!(
                "need at least one point and one dimension, got n={n}, m={m}"
            )));
        }
        if values.len() != n * m {
            return Err(Error::InvalidDataset(format!(
                "expected {} values for {n}x{m}, got {}",
                n * m,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at point {}, dimension {}",
                pos / m,
                pos % m
            )));
        }
        Ok(Self {
            values,
            n,
            m,
            labels: None,
        })
    }

    /// Build a dataset from a list of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} values, expected {m}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(values, rows.len(), m)
    }

    /// Attach ground-truth labels (`true` = outlier).
    pub fn with_labels(mut self, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::LabelLength {
                labels: labels.len(),
                points: self.n,
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.m..(j + 1) * self.m]
    }

    pub fn value(&self, point: usize, dim: usize) -> f64 {
        self.values[point * self.m + dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.m)
    }

    /// Values of one dimension, in point order.
    pub fn column(&self, dim: usize) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values.iter().skip(dim).step_by(self.m).copied()
    }

    /// Ids of the labelled outliers, ascending.
    pub fn outlier_ids(&self) -> Vec<usize> {
        self.labels
            .iter()
            .flat_map(|l| l.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| i))
            .collect()
    }
}

fn parse_field(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok()
}

/// Read a dataset from a comma-separated file, plus an optional label file
/// (one `0`/`1` per line).
///
/// A first row in which no field parses as a number is treated as a header.
pub fn load_csv(path: impl AsRef<Path>, label_path: Option<&Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut values = Vec::new();
    let mut m = None;
    let mut n = 0usize;
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if idx == 0 && record.iter().all(|f| parse_field(f).is_none()) {
            continue;
        }
        let width = *m.get_or_insert(record.len());
        if record.len() != width {
            return Err(parse_err(
                line,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        for (col, field) in record.iter().enumerate() {
            let v = parse_field(field).ok_or_else(|| {
                parse_err(
                    line,
                    format!("field {} is not a number: {field:?}", col + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("field {} is not finite", col + 1)));
            }
            values.push(v);
        }
        n += 1;
    }
    let ds = Dataset::new(values, n, m.unwrap_or(0))?;
    match label_path {
        Some(lp) => ds.with_labels(load_labels(lp)?),
        None => Ok(ds),
    }
}

/// Read a label file: one integer `0` or `1` per line.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<bool>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "0" => labels.push(false),
            "1" => labels.push(true),
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx as u64 + 1,
                    message: format!("expected 0 or 1, found {other:?}"),
                })
            }
        }
    }
    Ok(labels)
}

/// Write the values as headerless CSV. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        for row in ds.rows() {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{v}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Write labels as one `0`/`1` per line.
pub fn write_labels(labels: &[bool], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::with_capacity(labels.len() * 2);
    for &l in labels {
        text.push(if l { '1' } else { '0' });
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A closed real interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    fn sampler(&self) -> Uniform<f64> {
        Uniform::new_inclusive(self.lo, self.hi).expect("validated interval")
    }
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Parameters of the Gaussian-mixture generator with planted inner outliers.
///
/// Defaults: five clusters with means in `[20, 80]` and standard deviations
/// in `[10, 20]`, and ten outliers drawn uniformly from `[20, 80]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub m: usize,
    pub n: usize,
    pub cluster_count: usize,
    pub mean_range: Interval,
    pub sd_range: Interval,
    pub outlier_count: usize,
    pub outlier_range: Interval,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            m: 100,
            n: 500,
            cluster_count: 5,
            mean_range: Interval::new(20.0, 80.0),
            sd_range: Interval::new(10.0, 20.0),
            outlier_count: 10,
            outlier_range: Interval::new(20.0, 80.0),
            seed: 0,
        }
    }
}

impl GenSpec {
    /// The wider outlier range used by the default experiment plan.
    pub const WIDE_OUTLIER_RANGE: Interval = Interval::new(20.0, 100.0);

    pub fn new(m: usize, n: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::invalid(
                "dimension and point counts must be positive",
            ));
        }
        if self.outlier_count >= self.n {
            return Err(Error::invalid(format!(
                "outlier count {} must be below point count {}",
                self.outlier_count, self.n
            )));
        }
        if self.cluster_count == 0 {
            return Err(Error::invalid("cluster count must be positive"));
        }
        if !self.mean_range.is_valid() {
            return Err(Error::invalid("mean range must be a non-empty interval"));
        }
        if !self.outlier_range.is_valid() {
            return Err(Error::invalid("outlier range must be a non-empty interval"));
        }
        if !self.sd_range.is_valid() || self.sd_range.lo <= 0.0 {
            return Err(Error::invalid("standard deviation range must be positive"));
        }
        Ok(())
    }
}

/// A generated mixture together with the parameters it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub dataset: Dataset,
    /// `(mean, sd)` per component, `m` entries per component.
    pub components: Vec<Vec<(f64, f64)>>,
    /// Component of every row; `None` for outliers.
    pub assignment: Vec<Option<usize>>,
}

/// Generate a Gaussian-mixture dataset with uniformly drawn inner outliers.
///
/// Random draws happen in a fixed order from a single ChaCha8 stream seeded
/// with `spec.seed`:
/// 1. component parameters, for each component and each dimension a mean
///    then a standard deviation;
/// 2. the component of every normal point;
/// 3. coordinates, normal points first (row-major), then outliers;
/// 4. a shuffle of the row order so outlier ids are not clustered.
pub fn generate_highdim(spec: &GenSpec) -> Result<Dataset> {
    generate_mixture(spec).map(|g| g.dataset)
}

/// [`generate_highdim`], also returning the component parameters.
pub fn generate_mixture(spec: &GenSpec) -> Result<Mixture> {
    spec.validate()?;
    let GenSpec { m, n, .. } = *spec;
    let normals = n - spec.outlier_count;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mean_dist = spec.mean_range.sampler();
    let sd_dist = spec.sd_range.sampler();
    let components: Vec<Vec<(f64, f64)>> = (0..spec.cluster_count)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let mean = mean_dist.sample(&mut rng);
                    let sd = sd_dist.sample(&mut rng);
                    (mean, sd)
                })
                .collect()
        })
        .collect();
    let normal_dists: Vec<Vec<Normal<f64>>> = components
        .iter()
        .map(|c| {
            c.iter()
                .map(|&(mean, sd)| Normal::new(mean, sd).expect("positive sd"))
                .collect()
        })
        .collect();

    let assignment: Vec<usize> = (0..normals)
        .map(|_| rng.random_range(0..spec.cluster_count))
        .collect();

    let mut rows: Vec<(Vec<f64>, Option<usize>)> = Vec::with_capacity(n);
    for &c in &assignment {
        let row = normal_dists[c].iter().map(|d| d.sample(&mut rng)).collect();
        rows.push((row, Some(c)));
    }
    let outlier_dist = spec.outlier_range.sampler();
    for _ in 0..spec.outlier_count {
        rows.push((
            (0..m).map(|_| outlier_dist.sample(&mut rng)).collect(),
            None,
        ));
    }
    rows.shuffle(&mut rng);

    let assignment: Vec<Option<usize>> = rows.iter().map(|(_, c)| *c).collect();
    let dataset = assemble(rows.into_iter().map(|(r, c)| (r, c.is_none())).collect(), m)?;
    Ok(Mixture {
        dataset,
        components,
        assignment,
    })
}

/// The two-dimensional experiment: 20 points uniform in `[5,10]²`, 20 in
/// `[16,21]²` and 3 outliers uniform in the band `[11.5,14.5]²` between them.
///
/// Draw order: the first box, the second box, the outliers (x then y for
/// each point), then a shuffle of the rows.
pub fn generate_2d(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boxes = [
        (Interval::new(5.0, 10.0), 20, false),
        (Interval::new(16.0, 21.0), 20, false),
        (Interval::new(11.5, 14.5), 3, true),
    ];
    let mut rows = Vec::with_capacity(43);
    for (range, count, outlier) in boxes {
        let dist = range.sampler();
        for _ in 0..count {
            let x = dist.sample(&mut rng);
            let y = dist.sample(&mut rng);
            rows.push((vec![x, y], outlier));
        }
    }
    rows.shuffle(&mut rng);
    assemble(rows, 2).expect("fixed layout is valid")
}

fn assemble(rows: Vec<(Vec<f64>, bool)>, m: usize) -> Result<Dataset> {
    let n = rows.len();
    let mut values = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(n);
    for (row, label) in rows {
        values.extend(row);
        labels.push(label);
    }
    Dataset::new(values, n, m)?.with_labels(labels)
}

/// Sidecar record written next to generated CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum GenMetadata {
    Highdim {
        seed: u64,
        spec: GenSpec,
    },
    #[serde(rename = "2d")]
    TwoD {
        seed: u64,
    },
}
