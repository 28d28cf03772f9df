//! Numerical tolerances shared by every module and by the test suites.

/// Hermiticity and eigen-residual tolerance.
pub const EIG_TOL: f64 = 1e-10;

/// Smallest admissible eigenvalue (negated) for a PSD matrix, per unit dimension.
pub const PSD_TOL: f64 = 1e-10;

/// Entrywise equality for reconstructions and bound comparisons.
pub const EQ_TOL: f64 = 1e-9;

/// Relative off-diagonal Frobenius threshold at which Jacobi sweeps stop.
pub const JACOBI_OFF_TOL: f64 = 1e-13;

pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues below this are dropped when purifying.
pub const PURIFY_CUTOFF: f64 = 1e-14;

/// Default dimension cap for family constructors.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Minimum outcome probability for which conditional Eve states are defined.
pub const DEGENERATE_PROB: f64 = 1e-12;
