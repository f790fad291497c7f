//! Joint optical-flow and occlusion estimation.
//!
//! The model explains the next frame as a warp of the current one plus two
//! residuals: a large-but-sparse occlusion term `e1` and a small-but-dense
//! noise term `e2`. For a fixed linearization the joint problem in the flow
//! and `e1` is convex (quadratic data term, reweighted l1 on `e1`, total
//! variation on the flow), solved by alternating a pointwise shrinkage in
//! `e1` with a primal-dual pass over the flow, coarse-to-fine over a
//! pyramid.

mod flo;
mod solver;

pub use flo::{read_flo, write_flo};
pub use solver::{
    linearize, shrink, solve, solve_level, solve_linearized, FlowProblem, FlowSolution,
    Linearized, LevelParams,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Img(#[from] imgcore::ImgError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver diverged: objective rose by {rise:.3e} at step {step}")]
    SolverFailure {
        rise: f64,
        step: usize,
        trace: Vec<f64>,
    },
    #[error("malformed flow file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FlowError>;
