//! Derivative-free randomized optimization.
//!
//! Random pursuit with exact or adaptive line search, its accelerated variant,
//! a (1+1)-CMA and the limited-memory evolution-path family EP-CMA-m, plus
//! the benchmark objectives and the replication harness used to compare them.

// Input guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod linesearch;
pub mod objectives;
pub mod sampling;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
pub use harness::{ExperimentSpec, SummaryStats};
pub use linesearch::{LineSearchKind, LineSearchMode, StepResult};
pub use objectives::{Objective, ObjectiveKind, ObjectiveSpec, SpectralBounds};
pub use sampling::{CholeskyState, LowRankCovariance, RngStream};
pub use solvers::{AlgorithmId, CmaConfig, CommonConfig, DriftMode, Memory, RunRecord, SarpConfig, Solver};
