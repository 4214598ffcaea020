//! Group-sparse signal recovery from underdetermined linear measurements.
//!
//! The centerpiece is an iterative thresholding solver with
//! support-and-scale shrinking for least-squares recovery under concave,
//! non-Lipschitz penalties of group norms: every iteration zeroes the
//! groups below a threshold, restricts the measurement matrix to the
//! surviving columns, and applies an extrapolated, linearized proximal
//! step — so the working problem keeps shrinking as groups die. Convex
//! baselines (group lasso via ADMM), a seeded synthetic problem generator
//! and a benchmark harness round out the crate.
//!
//! Start with [`solver::Fits3Solver`] or the runnable programs in
//! `examples/`; the `fits3` binary exposes the same functionality as a
//! command line.

// Parameter validation deliberately writes `!(x > 0.0)` so that NaN is
// rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod error;
pub mod grouping;
pub mod io;
pub mod linalg;
pub mod penalty;
pub mod probgen;
pub mod solver;

pub use error::{Error, Result};
