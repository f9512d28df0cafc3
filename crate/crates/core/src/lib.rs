//! Discriminant sparse representation classifiers.
//!
//! A query is coded over the training samples by a ridge-regularized least
//! squares problem augmented with a within-class compactness term and a
//! between-class separation term. The coefficients have a closed form
//! ([`solver`]). [`ldsr`] wraps the solver in a two-stage locality classifier,
//! [`kernel`] runs the same pipeline in an RBF feature space, and
//! [`baselines`] provides CRC and nearest-subspace comparisons. [`eval`]
//! reproduces repeated random-split benchmarks.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod dictlearn;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod ldsr;
pub mod linalg;
pub mod selftest;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};
