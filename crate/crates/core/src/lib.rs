//! Linearized alternating direction method with adaptive penalty (LADMAP),
//! its specialization to low-rank representation, baseline solvers and a
//! synthetic subspace-clustering benchmark pipeline.

pub mod baselines;
pub mod error;
pub mod ladmap;
pub mod linalg;
pub mod lrr;
pub mod pipeline;
pub mod prox;

pub use error::{Error, Result};
