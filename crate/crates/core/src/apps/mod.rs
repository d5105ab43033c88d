//! Applications of alternating projections (linear programming and min-max
//! problems), the ball–hyperplane rate experiment, and the registry of
//! worked examples used by `reproduce`.

pub mod holder;
pub mod lp;
pub mod minmax;
pub mod registry;

use thiserror::Error;

use crate::certify::CertifyError;
use crate::geometry::GeometryError;
use crate::oracle::OracleError;
use crate::problem::ProblemError;
use crate::solvers::SolverError;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("dual point is not dual feasible: {0}")]
    DualInfeasible(String),
    #[error("beta = {beta} is not below the optimal value ({detail})")]
    BetaNotBelowOptimum { beta: f64, detail: String },
    #[error("displacement is not aligned with the cost (angle {0:e})")]
    Misaligned(f64),
}
