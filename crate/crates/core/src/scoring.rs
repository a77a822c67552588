//! The scoring function: image keypoints in, score tokens out.
//!
//! Calibration fits the image → board-plane homography from the four
//! calibration points, then re-centers by the mean of their transformed
//! positions and normalizes by their mean distance to that center. With
//! exact points the re-centering is a no-op; with noisy points it averages
//! the residual error instead of trusting any single corner.

use serde::{Deserialize, Serialize};

use crate::board::{BoardSpec, ScoreToken};
use crate::detection::{complete_calibration, KeypointSet};
use crate::geometry::{estimate_homography, GeometryError, Homography, PlanarPoint};
use crate::scalar::Scalar;

/// Fitted image → board-plane mapping for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardCalibration<T> {
    pub h: Homography<T>,
    /// Mean of the transformed calibration points, in board-plane units.
    pub center: PlanarPoint<T>,
    /// Mean distance of the transformed calibration points to `center`.
    pub radius: T,
}

impl<T: Scalar> BoardCalibration<T> {
    /// Maps an image point to normalized board coordinates (center at the
    /// origin, outer double edge at radius 1).
    pub fn to_board(&self, p: PlanarPoint<T>) -> Result<PlanarPoint<T>, GeometryError> {
        let q = self.h.apply(p)?;
        Ok(PlanarPoint::new(
            (q.x - self.center.x) / self.radius,
            (q.y - self.center.y) / self.radius,
        ))
    }
}

/// Scored image: one token per dart plus their sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub tokens: Vec<ScoreToken>,
    pub total: u32,
    /// True when fewer than three calibration points were available, in
    /// which case the image is assigned a total of 0 with no tokens.
    pub calibration_failed: bool,
}

impl ScoreResult {
    fn failed() -> Self {
        Self { tokens: Vec::new(), total: 0, calibration_failed: true }
    }
}

/// Fits the board calibration from the four calibration keypoints.
pub fn calibrate<T: Scalar>(
    cal: &[PlanarPoint<T>; 4],
    spec: &BoardSpec<T>,
) -> Result<BoardCalibration<T>, GeometryError> {
    let h = estimate_homography(cal, &spec.cal_point_targets)?;
    let transformed = [
        h.apply(cal[0])?,
        h.apply(cal[1])?,
        h.apply(cal[2])?,
        h.apply(cal[3])?,
    ];
    let quarter = T::c(0.25);
    let mut center = PlanarPoint::new(T::zero(), T::zero());
    for p in &transformed {
        center = center + *p;
    }
    center = PlanarPoint::new(center.x * quarter, center.y * quarter);
    let mut radius = T::zero();
    for p in &transformed {
        radius = radius + p.distance(&center);
    }
    radius = radius * quarter;
    if radius <= T::zero() {
        return Err(GeometryError::DegenerateConfiguration(
            "calibration points collapse to a single board point",
        ));
    }
    Ok(BoardCalibration { h, center, radius })
}

/// Classifies a normalized board-plane point into a score token.
pub fn classify_board_point<T: Scalar>(p: PlanarPoint<T>, spec: &BoardSpec<T>) -> ScoreToken {
    let r = p.x.hypot(p.y);
    if r < spec.r_double_bull {
        return ScoreToken::DoubleBull;
    }
    if r < spec.r_bull {
        return ScoreToken::Bull;
    }
    if r > spec.r_double_outer {
        return ScoreToken::Miss;
    }
    let sector = spec.sector_at_angle(p.clockwise_angle_deg());
    if r >= spec.r_treble_inner && r < spec.r_treble_outer {
        ScoreToken::Treble(sector)
    } else if r >= spec.r_double_inner {
        ScoreToken::Double(sector)
    } else {
        ScoreToken::Single(sector)
    }
}

/// Normalized distance from a board-plane point to the nearest
/// classification boundary (ring edge or, outside the bull, sector wire).
///
/// Used to exclude knife-edge cases from exactness checks and to keep the
/// simulator from placing darts on boundaries.
pub fn boundary_distance<T: Scalar>(p: PlanarPoint<T>, spec: &BoardSpec<T>) -> T {
    let r = p.x.hypot(p.y);
    let radii = [
        spec.r_double_bull,
        spec.r_bull,
        spec.r_treble_inner,
        spec.r_treble_outer,
        spec.r_double_inner,
        spec.r_double_outer,
    ];
    let mut d = T::infinity();
    for rk in radii {
        d = d.min((r - rk).abs());
    }
    if r > spec.r_bull {
        // Wires sit at 9 + 18k degrees clockwise; arc distance ≈ r·Δθ.
        let theta = p.clockwise_angle_deg();
        let m = (theta - T::c(9.0)).to_f64().unwrap().rem_euclid(18.0);
        let ang_deg = m.min(18.0 - m);
        d = d.min(r * T::c(ang_deg.to_radians()));
    }
    d
}

/// [`score_darts`] output plus the fitted calibration and per-dart
/// board-plane positions, for callers that also need localization.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredKeypoints<T> {
    pub result: ScoreResult,
    /// Absent when calibration failed.
    pub calibration: Option<BoardCalibration<T>>,
    /// One entry per dart; `None` for darts mapped past the horizon.
    pub board_points: Vec<Option<PlanarPoint<T>>>,
}

/// Scores one image's resolved keypoints, keeping the intermediate
/// geometry.
///
/// Recovers a single missing calibration point first; with two or more
/// missing the image scores 0. A dart whose image position maps past the
/// horizon of the fitted homography counts as a miss.
pub fn score_darts_full<T: Scalar>(k: &KeypointSet<T>, spec: &BoardSpec<T>) -> ScoredKeypoints<T> {
    let failed = ScoredKeypoints {
        result: ScoreResult::failed(),
        calibration: None,
        board_points: Vec::new(),
    };
    let completed = match complete_calibration(k) {
        Ok(c) => c,
        Err(_) => return failed,
    };
    let cal = [
        completed.cal[0].unwrap(),
        completed.cal[1].unwrap(),
        completed.cal[2].unwrap(),
        completed.cal[3].unwrap(),
    ];
    let calibration = match calibrate(&cal, spec) {
        Ok(c) => c,
        Err(_) => return failed,
    };
    let board_points: Vec<Option<PlanarPoint<T>>> = completed
        .darts
        .iter()
        .map(|&d| calibration.to_board(d).ok())
        .collect();
    let tokens: Vec<ScoreToken> = board_points
        .iter()
        .map(|bp| match bp {
            Some(p) => classify_board_point(*p, spec),
            None => ScoreToken::Miss,
        })
        .collect();
    let total = tokens.iter().map(ScoreToken::value).sum();
    ScoredKeypoints {
        result: ScoreResult { tokens, total, calibration_failed: false },
        calibration: Some(calibration),
        board_points,
    }
}

/// Scores one image's resolved keypoints. See [`score_darts_full`].
pub fn score_darts<T: Scalar>(k: &KeypointSet<T>, spec: &BoardSpec<T>) -> ScoreResult {
    score_darts_full(k, spec).result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::default_board_spec;
    use crate::geometry::{similarity, Homography};
    use approx::assert_abs_diff_eq;

    fn image_cal(spec: &BoardSpec<f64>, h: &Homography<f64>) -> [PlanarPoint<f64>; 4] {
        spec.cal_point_targets.map(|p| h.apply(p).unwrap())
    }

    #[test]
    fn calibrate_on_canonical_targets_is_identity() {
        let spec = default_board_spec::<f64>();
        let c = calibrate(&spec.cal_point_targets, &spec).unwrap();
        assert_abs_diff_eq!(c.center.x, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.center.y, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.radius, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn calibrate_absorbs_similarity() {
        let spec = default_board_spec::<f64>();
        let cam = Homography::scaling(200.0).then(&Homography::translation(400.0, 400.0));
        let c = calibrate(&image_cal(&spec, &cam), &spec).unwrap();
        assert_abs_diff_eq!(c.center.x, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.center.y, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.radius, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn classify_ring_chain() {
        let spec = default_board_spec::<f64>();
        let up = |r: f64| PlanarPoint::new(0.0, -r);
        assert_eq!(classify_board_point(PlanarPoint::new(0.0, 0.0), &spec), ScoreToken::DoubleBull);
        assert_eq!(classify_board_point(up(0.02), &spec), ScoreToken::DoubleBull);
        assert_eq!(classify_board_point(up(0.05), &spec), ScoreToken::Bull);
        assert_eq!(classify_board_point(up(0.3), &spec), ScoreToken::Single(20));
        assert_eq!(classify_board_point(up(0.608), &spec), ScoreToken::Treble(20));
        assert_eq!(classify_board_point(up(0.8), &spec), ScoreToken::Single(20));
        assert_eq!(classify_board_point(up(0.97), &spec), ScoreToken::Double(20));
        assert_eq!(classify_board_point(up(1.0), &spec), ScoreToken::Double(20));
        assert_eq!(classify_board_point(up(1.2), &spec), ScoreToken::Miss);
    }

    #[test]
    fn classify_ring_boundaries() {
        let spec = default_board_spec::<f64>();
        let up = |r: f64| PlanarPoint::new(0.0, -r);
        // Inner edges are inclusive for the ring they open.
        assert_eq!(classify_board_point(up(spec.r_treble_inner), &spec), ScoreToken::Treble(20));
        assert_eq!(classify_board_point(up(spec.r_double_inner), &spec), ScoreToken::Double(20));
        // Outer treble edge falls out of the treble back into single.
        assert_eq!(classify_board_point(up(spec.r_treble_outer), &spec), ScoreToken::Single(20));
        // Bull edges behave the same way.
        assert_eq!(classify_board_point(up(spec.r_double_bull), &spec), ScoreToken::Bull);
        assert_eq!(classify_board_point(up(spec.r_bull), &spec), ScoreToken::Single(20));
    }

    #[test]
    fn score_darts_end_to_end() {
        let spec = default_board_spec::<f64>();
        let cam = similarity(
            30.0,
            false,
            false,
            PlanarPoint::new(420.0, 390.0),
            180.0,
            PlanarPoint::new(0.0, 0.0),
        );
        let mut k = KeypointSet::<f64>::default();
        for (i, p) in image_cal(&spec, &cam).iter().enumerate() {
            k.cal[i] = Some(*p);
        }
        // Board-plane placements with known tokens, pushed through the camera.
        let placements = [
            (PlanarPoint::new(0.0, -0.608), ScoreToken::Treble(20)),
            (PlanarPoint::new(0.0, 0.0), ScoreToken::DoubleBull),
            (PlanarPoint::new(1.2, 0.0), ScoreToken::Miss),
        ];
        for (p, _) in &placements {
            k.darts.push(cam.apply(*p).unwrap());
            k.dart_confidences.push(1.0);
        }
        let result = score_darts(&k, &spec);
        assert!(!result.calibration_failed);
        let want: Vec<ScoreToken> = placements.iter().map(|&(_, t)| t).collect();
        assert_eq!(result.tokens, want);
        assert_eq!(result.total, 60 + 50);
    }

    #[test]
    fn two_missing_cal_scores_zero() {
        let spec = default_board_spec::<f64>();
        let mut k = KeypointSet::<f64>::default();
        k.cal[0] = Some(PlanarPoint::new(100.0, 100.0));
        k.cal[1] = Some(PlanarPoint::new(700.0, 100.0));
        for _ in 0..3 {
            k.darts.push(PlanarPoint::new(400.0, 400.0));
            k.dart_confidences.push(1.0);
        }
        let result = score_darts(&k, &spec);
        assert!(result.calibration_failed);
        assert_eq!(result.total, 0);
        assert!(result.tokens.is_empty());
    }

    #[test]
    fn one_missing_cal_recovers_under_affine_view() {
        let spec = default_board_spec::<f64>();
        let cam = similarity(
            -15.0,
            false,
            false,
            PlanarPoint::new(400.0, 400.0),
            200.0,
            PlanarPoint::new(0.0, 0.0),
        );
        let mut k = KeypointSet::<f64>::default();
        for (i, p) in image_cal(&spec, &cam).iter().enumerate() {
            if i != 2 {
                k.cal[i] = Some(*p);
            }
        }
        k.darts.push(cam.apply(PlanarPoint::new(0.0, -0.608)).unwrap());
        k.dart_confidences.push(1.0);
        let result = score_darts(&k, &spec);
        assert_eq!(result.tokens, vec![ScoreToken::Treble(20)]);
        assert_eq!(result.total, 60);
    }

    #[test]
    fn degenerate_calibration_fails_closed() {
        let spec = default_board_spec::<f64>();
        let mut k = KeypointSet::<f64>::default();
        // Three collinear points and a fourth on the same line.
        for i in 0..4 {
            k.cal[i] = Some(PlanarPoint::new(i as f64 * 10.0, 0.0));
        }
        k.darts.push(PlanarPoint::new(5.0, 5.0));
        k.dart_confidences.push(1.0);
        let result = score_darts(&k, &spec);
        assert!(result.calibration_failed);
        assert_eq!(result.total, 0);
    }

    #[test]
    fn boundary_distance_measures_nearest_edge() {
        let spec = default_board_spec::<f64>();
        // On the outer double edge: distance 0.
        assert_abs_diff_eq!(
            boundary_distance(PlanarPoint::new(0.0, -1.0), &spec),
            0.0,
            epsilon = 1e-12
        );
        // On a wire at 9 degrees, mid-single radius: distance 0.
        let wire = PlanarPoint::new(0.4 * 9.0f64.to_radians().sin(), -0.4 * 9.0f64.to_radians().cos());
        assert_abs_diff_eq!(boundary_distance(wire, &spec), 0.0, epsilon = 1e-12);
        // Dead center of the treble-20 cell: limited by the ring half-width.
        let mid_t = (spec.r_treble_inner + spec.r_treble_outer) / 2.0;
        let half_ring = (spec.r_treble_outer - spec.r_treble_inner) / 2.0;
        assert_abs_diff_eq!(
            boundary_distance(PlanarPoint::new(0.0, -mid_t), &spec),
            half_ring,
            epsilon = 1e-12
        );
        // Inside the bull, wires do not count.
        let near_wire_in_bull = PlanarPoint::new(0.02, -0.05);
        assert!(boundary_distance(near_wire_in_bull, &spec) > 0.01);
    }

    #[test]
    fn full_scoring_exposes_board_points() {
        let spec = default_board_spec::<f64>();
        let mut k = KeypointSet::<f64>::default();
        for (i, p) in spec.cal_point_targets.iter().enumerate() {
            k.cal[i] = Some(*p);
        }
        k.darts.push(PlanarPoint::new(0.3, -0.4));
        k.dart_confidences.push(1.0);
        let full = score_darts_full(&k, &spec);
        assert!(full.calibration.is_some());
        let bp = full.board_points[0].unwrap();
        assert_abs_diff_eq!(bp.x, 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(bp.y, -0.4, epsilon = 1e-9);
        assert_eq!(full.result, score_darts(&k, &spec));
    }

    #[test]
    fn total_is_token_sum() {
        let r = ScoreResult {
            tokens: vec![ScoreToken::Treble(20), ScoreToken::Double(5), ScoreToken::Bull],
            total: 95,
            calibration_failed: false,
        };
        assert_eq!(r.total, r.tokens.iter().map(ScoreToken::value).sum::<u32>());
    }
}
