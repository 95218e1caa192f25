//! Numerical tolerances shared by validation code and tests.

/// Statevector norm drift allowed after any gate sequence.
pub const NORM: f64 = 1e-10;
/// Trace, hermiticity and positivity slack for density matrices.
pub const DENSITY: f64 = 1e-9;
/// Slack on probability vectors (sums and negative entries).
pub const PROBABILITY: f64 = 1e-9;
/// Smallest entry accepted as non-negative in an outcome distribution.
pub const NEGATIVE_PROBABILITY: f64 = 1e-12;
/// Slack on mixture weights in generator configuration.
pub const FRACTION_SUM: f64 = 1e-9;
/// Slack on similarity-matrix symmetry and diagonal.
pub const MATRIX: f64 = 1e-9;
