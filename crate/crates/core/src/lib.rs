//! Core engine for single-image automatic dart scoring.
//!
//! Turns detector keypoint output into dart scores and provides the
//! supporting machinery around that pipeline:
//!
//! 1. **board** – canonical dartboard geometry: ring radii, sector layout,
//!    calibration-point targets.
//! 2. **geometry** – planar homographies: 4-point DLT estimation,
//!    application, inversion, similarity builders.
//! 3. **detection** – detector post-processing: confidence filtering, NMS,
//!    keypoint resolution, missing-calibration recovery.
//! 4. **scoring** – rectifies keypoints to the board plane and classifies
//!    darts into score tokens.
//! 5. **augment** – geometric augmentation strategies as exact coordinate
//!    maps (flips, stepped/small rotations, perspective warp, jitter) plus
//!    an optional raster warp.
//! 6. **eval** – Percent Correct Score, dart matching, and error taxonomy.
//! 7. **sim** – synthetic scene generator and noisy-detector model used as
//!    the end-to-end oracle.
//! 8. **io** – file formats (annotations, detections, configs, reports)
//!    and SVG rendering.
//!
//! The numeric routines are generic over the scalar type; the pipeline,
//! simulator, and IO layers instantiate `f64` (see the aliases at the
//! crate root).

pub mod augment;
pub mod board;
pub mod detection;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod rng;
pub mod scalar;
pub mod scoring;
pub mod sim;
pub mod tolerances;

pub use board::{BoardSpec, Ring, ScoreToken};
pub use geometry::{GeometryError, Homography, PlanarPoint};
pub use scalar::Scalar;

/// Planar point at pipeline precision.
pub type Point = PlanarPoint<f64>;
/// Homography at pipeline precision.
pub type Warp = Homography<f64>;
/// Board geometry at pipeline precision.
pub type Board = BoardSpec<f64>;
