//! Numeric tolerances used across the engine.
//!
//! All values are absolute, in pixels or normalized board units, at the
//! magnitudes the pipeline operates on (coordinates up to ~1e4 px).

/// Homogeneous divisor below which a transformed point is treated as at
/// infinity.
pub const HOMOGENEOUS_EPS: f64 = 1e-12;

/// Determinant threshold (after scale normalization) below which a 3x3
/// matrix counts as numerically singular.
pub const SINGULAR_DET_EPS: f64 = 1e-12;

/// Expected round-trip accuracy of homography estimate/apply/invert chains.
pub const ROUND_TRIP_TOL: f64 = 1e-9;

/// Reprojection bound for the DLT on its own four correspondences.
pub const DLT_REPROJECTION_TOL: f64 = 1e-6;

/// Board-plane distance to a classification boundary below which a point is
/// excluded from oracle comparisons.
pub const BOUNDARY_EXCLUSION: f64 = 1e-9;

/// Retry cap for rejection sampling of degenerate perspective warps.
pub const WARP_RETRY_LIMIT: u32 = 16;
