//! Crate-wide error type.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The block matrix built from the coefficient list is numerically
    /// singular, which signals an inconsistent leading coefficient.
    #[error("coupling matrix Q is numerically singular (min singular value {min_sv:.3e})")]
    SingularQ { min_sv: f64 },

    #[error("model invariant violated: {0}")]
    InvariantViolation(String),

    #[error("boundary pair is not impedance passive: {0}")]
    NotPassive(String),

    #[error("grid too coarse: {nodes} nodes, at least {required} required")]
    GridTooCoarse { nodes: usize, required: usize },

    #[error(
        "boundary elimination singular: constraint rows do not determine the eliminated unknowns"
    )]
    SingularElimination,

    #[error("resolvent numerically singular at lambda = {lambda} (cond {cond:.3e})")]
    ResolventSingular { lambda: Complex64, cond: f64 },

    #[error("transfer function not surjective at omega = {omega}: rank {rank} < {expected}")]
    NotSurjective {
        omega: f64,
        rank: usize,
        expected: usize,
    },

    #[error("closed-loop matrix not exponentially stable (abscissa {abscissa:.6e}); Sylvester solve refused")]
    Unstable { abscissa: f64 },

    #[error("eigenvalue iteration failed to converge")]
    EigFailure,

    #[error("epsilon grid is empty")]
    EmptyGrid,

    #[error("time step solve failed: I - dt/2*A is singular; try halving dt")]
    StepSolveFailure,

    #[error("energy audit failed at step {step}: weighted energy increased by {increase:.3e}")]
    AuditFailure { step: usize, increase: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
