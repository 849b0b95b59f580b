//! Numerical tolerances shared across the crate.
//!
//! The algebraic conditions certified here (rank, positivity, identity of
//! Gram blocks) are exact in theory; these thresholds separate structural
//! failures from roundoff.

/// Relative rank / positivity threshold: singular values (or eigenvalue
/// magnitudes) below `RANK_REL * largest` count as zero.
pub const RANK_REL: f64 = 1e-9;

/// Relative tolerance for rank decisions in the internal-model rank tests.
pub const GCOND_REL: f64 = 1e-9;

/// Condition-number limit above which a stacked resolvent solve is reported
/// as singular (the evaluation frequency collides with the discrete spectrum).
pub const COND_LIMIT: f64 = 1e12;

/// Relative residual accepted for the regulator-equation check.
pub const REGULATOR_RESIDUAL: f64 = 1e-6;

/// Agreement required between the two transfer-function evaluation routes.
pub const TRANSFER_ROUTE_AGREEMENT: f64 = 1e-8;

/// Relative energy-increase tolerance per step in the dissipation audit.
pub const AUDIT_STEP_REL: f64 = 1e-6;
