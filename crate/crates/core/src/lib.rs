//! Entropy-regularized optimal transport in the log domain, with warm-start
//! initializers for the dual potentials.
//!
//! The solver ([`sinkhorn::sinkhorn_solve`]) maximizes the entropic dual
//!
//! ```text
//! E(f, g) = <f, a> + <g, b> - eps * sum_ij exp((f_i + g_j - C_ij) / eps)
//! ```
//!
//! by exact block-coordinate ascent evaluated with max-shifted log-sum-exp
//! reductions, so the kernel matrix `exp(-C/eps)` is never materialized.
//! Plain Sinkhorn starts from zero potentials; everything else in this crate
//! exists to start it somewhere better:
//!
//! * [`init1d`] — exact unregularized duals for sorted one-dimensional
//!   problems (north-west-corner plan, support forest, dual recovery) and the
//!   cheap fixed-point iteration `dualsort` for the uniform sorting case.
//! * [`gauss`] — moment matching: fit Gaussians to both clouds and evaluate
//!   the closed-form quadratic dual potential of the Gaussian pair.
//! * [`gmm`] — mixture refinement of the same idea: fit K-component mixtures,
//!   solve the small K x K transport problem between components, and
//!   interpolate its potentials through posterior responsibilities.
//! * [`subsample`] — solve the problem on a subsample and extrapolate the
//!   dual potential to the full cloud through the entropic c-transform.
//!
//! [`softops`] builds differentiable ranking and sorting on top of the
//! solver, and [`measures`]/[`io`] hold the shared problem types.

pub mod gauss;
pub mod gmm;
pub mod init1d;
pub mod io;
pub mod measures;
pub mod sinkhorn;
pub mod softops;
pub mod subsample;
pub(crate) mod util;

pub use gauss::{bures_squared, fit_gaussian, gaus_init, sqrtm, GaussianParams, MongeMap};
pub use gmm::{fit_gmm, gmm_init, CovarianceKind, GmmParams};
pub use init1d::{dualsort, init_1d, recover_duals, SparsePlan};
pub use measures::{CostKind, CostMatrix, DiscreteMeasure};
pub use softops::{ranking_problem, soft_rank, soft_sort, RankingInit, RankingProblem};
pub use subsample::{entropic_extrapolate, subsample_init, subsample_measure, SubsampleSpec};
pub use sinkhorn::{
    center_potential, coupling_from_duals, dual_objective, marginal_error, sinkhorn_solve,
    softmin_rows, Acceleration, DualPotentials, InitialPotential, SinkhornConfig, SinkhornInit,
    SolveReport, TransportPlan,
};

/// Errors shared by construction, solving, and initialization routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Array shapes do not line up (weights vs. support vs. cost sizes).
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A weight vector failed validation (negative, non-finite, zero atom,
    /// or zero total mass).
    #[error("invalid weights: {0}")]
    Weights(String),
    /// A numeric input that must be finite was not.
    #[error("non-finite input: {0}")]
    NonFinite(String),
    /// A configuration value is outside its documented range.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An argument was structurally valid but unusable for the operation.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Sinkhorn iteration produced non-finite potentials and was aborted.
    #[error("numerical failure: potentials became non-finite at sweep {sweep}")]
    Diverged { sweep: usize },
    /// An inner solve (subsample or mixture coupling) did not converge.
    #[error("inner solve stopped at error {error:.3e} > tau {tau:.3e} after {sweeps} sweeps")]
    InnerSolve { sweeps: usize, error: f64, tau: f64 },
    /// The support graph of a transport plan contains a cycle.
    #[error("transport plan support is not a forest (cycle detected)")]
    CyclicSupport,
    /// Dual recovery was fed a plan that admits no feasible tight potentials.
    #[error("plan is not optimal: recovered potentials violate feasibility by {violation:.3e}")]
    NonOptimalPlan { violation: f64 },
    /// A matrix operation required symmetry that the input lacks.
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    /// A matrix operation required positive definiteness that the input lacks.
    #[error("matrix is not positive definite (smallest eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),
    /// A text input could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// An underlying I/O operation failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
