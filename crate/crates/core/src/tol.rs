//! Numeric tolerances and iteration budgets shared across the crate.
//!
//! Centralized so the contract between validation, quadrature and the
//! verification oracles stays in one place.

/// Covariance entries must be symmetric to this relative tolerance.
pub const SYMMETRY_REL: f64 = 1e-12;

/// Eigenvalues below `-PSD_EIG_REL * max|eig|` reject a covariance matrix.
pub const PSD_EIG_REL: f64 = 1e-10;

/// Relative tolerance for bracketed scalar root finding.
pub const ROOT_REL: f64 = 1e-12;

/// Relative tolerance target for improper quadrature values.
pub const QUAD_REL: f64 = 1e-8;

/// Absolute Cauchy threshold on dyadic partial integrals in the
/// admissibility check.
pub const ADMISSIBLE_CAUCHY_ABS: f64 = 1e-8;

/// A dyadic slice sequence still shrinking by at least this factor per
/// level when the refinement budget runs out counts as convergent: the
/// remaining tail is geometrically dominated.
pub const ADMISSIBLE_DECAY_RATIO: f64 = 0.9;

/// Dyadic refinement budget for improper integrals on `(0, delta]`.
pub const MAX_DYADIC_LEVELS: usize = 40;

/// Floating slack allowed by the sine/weight-ratio comparison oracle.
pub const SINE_BOUND_SLACK: f64 = 1e-12;

/// Slack allowed on the increment-vs-sigma verification ratio.
pub const SIGMA_ORACLE_SLACK: f64 = 1e-10;

/// Quadratic forms this far below zero (scaled) indicate a PSD violation.
pub const QUADFORM_NEG_ABS: f64 = 1e-12;
