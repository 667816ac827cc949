//! Grid realization in exponential coordinates: flow difference quotients,
//! fractional seminorms, horizontal Sobolev norms, a discrete weak-form solver
//! and interior energy checks.

pub mod checks;
pub mod grid;
pub mod ops;
pub mod solve;
pub mod sparse;

pub use checks::{caccioppoli_check, hormander_ratio, peetre_seminorm, CaccioppoliReport, HormanderReport, SeminormParams};
pub use grid::{Grid, GridField};
pub use ops::{flow_difference, sobolev_norm, FlowDifference, FlowOperator, HorizontalOps, Region};
pub use solve::{assemble_and_solve, SolveOptions, SolveReport};
pub use sparse::Csr;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum NumericsError {
    #[error("StepTooLarge: flow step {s} leaves the box at the identity")]
    StepTooLarge { s: f64 },
    #[error("MarginTooSmall: region needs {needed} valid stencil layers")]
    MarginTooSmall { needed: usize },
    #[error("SolverDiverged after {iterations} iterations: {reason}")]
    SolverDiverged { iterations: usize, reason: String },
    #[error("IllConditioned: true relative residual {residual:e} above tolerance")]
    IllConditioned { residual: f64 },
    #[error("non-finite value in grid field")]
    NonFinite,
    #[error("shape mismatch: {0}")]
    Shape(String),
}
