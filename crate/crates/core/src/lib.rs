//! Projected cell density (PCD) outlier detection for high-dimensional data.
//!
//! PCD finds *inner* outliers: points whose coordinates all lie inside the
//! range of the normal data, so that no single projection reveals them. Each
//! dimension is split into `cn` equal-width cells. Every point then collects
//! two kinds of weights:
//!
//! * a first-projection weight per dimension, the density of its cell divided
//!   by the mean density of the occupied cells of that dimension;
//! * second-projection weights, obtained by taking all points that share a
//!   cell in one dimension and looking at how they spread over the cells of
//!   another dimension. Members that land in sparse, isolated cells get small
//!   weights.
//!
//! The weights are combined into one score per point ([`pcd::si_scores`]);
//! the score is 1 when every weight is 1, and points that keep landing in
//! sparse cells score higher than the rest.
//!
//! The crate also ships a Local Outlier Factor baseline ([`lof`]), synthetic
//! dataset generators ([`dataset`]), precision/recall evaluation ([`eval`]) and
//! an experiment runner ([`bench`]).
//!
//! ```
//! use pcd::dataset::generate_2d;
//! use pcd::pcd::{detect, ProjectionSchedule};
//!
//! let ds = generate_2d(7);
//! let result = detect(&ds, 7, &ProjectionSchedule::full(), 3).unwrap();
//! assert_eq!(result.ranking.len(), 43);
//! ```

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod grid;
pub mod lof;
pub mod pcd;

pub use error::{Error, Result};
