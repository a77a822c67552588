//! Detector post-processing.
//!
//! Turns raw per-image box predictions into a resolved keypoint set:
//! confidence filtering and per-class non-maximum suppression, picking the
//! best box per calibration class, capping darts, recovering a single
//! missing calibration point, and converting between keypoints and the
//! square boxes used for label export.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PlanarPoint;
use crate::scalar::Scalar;

/// Class id of dart keypoints; 0..3 are the four calibration classes.
pub const DART_CLASS: u8 = 4;

/// Default cap on darts kept per image.
pub const DEFAULT_MAX_DARTS: usize = 3;

/// Default suppression threshold: overlapping same-class boxes above this
/// IoU collapse to the most confident one.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.3;

/// Default confidence floor; boxes below it are discarded before NMS.
pub const DEFAULT_CONF_THRESHOLD: f64 = 0.25;

/// One predicted keypoint box: a square (or near-square) region whose
/// center encodes the keypoint location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeypointBox<T> {
    #[serde(rename = "class")]
    pub class_id: u8,
    pub cx: T,
    pub cy: T,
    pub w: T,
    pub h: T,
    #[serde(rename = "conf")]
    pub confidence: T,
}

impl<T: Scalar> KeypointBox<T> {
    pub fn center(&self) -> PlanarPoint<T> {
        PlanarPoint::new(self.cx, self.cy)
    }

    /// Intersection-over-union of two axis-aligned boxes.
    pub fn iou(&self, other: &Self) -> T {
        let half = T::c(0.5);
        let ix = (self.cx + self.w * half).min(other.cx + other.w * half)
            - (self.cx - self.w * half).max(other.cx - other.w * half);
        let iy = (self.cy + self.h * half).min(other.cy + other.h * half)
            - (self.cy - self.h * half).max(other.cy - other.h * half);
        if ix <= T::zero() || iy <= T::zero() {
            return T::zero();
        }
        let inter = ix * iy;
        let union = self.w * self.h + other.w * other.h - inter;
        if union <= T::zero() {
            T::zero()
        } else {
            inter / union
        }
    }
}

/// Raw detector output for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSet<T> {
    #[serde(rename = "image")]
    pub image_id: String,
    pub input_size: u32,
    pub boxes: Vec<KeypointBox<T>>,
}

/// Resolved keypoints for one image: at most one point per calibration
/// class plus up to `max_darts` dart locations, in image pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointSet<T> {
    pub cal: [Option<PlanarPoint<T>>; 4],
    /// Set for calibration points filled in by [`complete_calibration`]
    /// rather than detected directly.
    pub cal_recovered: [bool; 4],
    pub darts: Vec<PlanarPoint<T>>,
    pub dart_confidences: Vec<T>,
}

impl<T> Default for KeypointSet<T> {
    fn default() -> Self {
        Self {
            cal: [None, None, None, None],
            cal_recovered: [false; 4],
            darts: Vec::new(),
            dart_confidences: Vec::new(),
        }
    }
}

impl<T: Scalar> KeypointSet<T> {
    pub fn n_missing_cal(&self) -> usize {
        self.cal.iter().filter(|c| c.is_none()).count()
    }
}

/// Post-processing failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectionError {
    /// Two or more calibration points are missing; one unknown corner of a
    /// parallelogram is recoverable, two are not.
    #[error("{missing} calibration points missing; at most 1 is recoverable")]
    NotRecoverable { missing: usize },
}

/// Sorts box indices by descending confidence, ties broken by lower index.
fn order_by_confidence<T: Scalar>(boxes: &[KeypointBox<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| {
        boxes[b]
            .confidence
            .partial_cmp(&boxes[a].confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Confidence filtering plus greedy per-class non-maximum suppression.
///
/// Boxes below `conf_threshold` are dropped; the rest are visited in
/// descending confidence and kept unless they overlap an already-kept box
/// of the same class with IoU above `iou_threshold`. Output is in
/// descending confidence order.
pub fn nms<T: Scalar>(
    boxes: &[KeypointBox<T>],
    iou_threshold: T,
    conf_threshold: T,
) -> Vec<KeypointBox<T>> {
    let order = order_by_confidence(boxes);
    let mut kept: Vec<KeypointBox<T>> = Vec::new();
    for idx in order {
        let b = boxes[idx];
        if b.confidence < conf_threshold {
            // Order is descending, so everything after is dropped too.
            break;
        }
        let suppressed = kept
            .iter()
            .any(|k| k.class_id == b.class_id && k.iou(&b) > iou_threshold);
        if !suppressed {
            kept.push(b);
        }
    }
    kept
}

/// Collapses surviving boxes into keypoints: the single most confident box
/// per calibration class, and the `max_darts` most confident dart centers.
pub fn resolve_keypoints<T: Scalar>(d: &DetectionSet<T>, max_darts: usize) -> KeypointSet<T> {
    let mut out = KeypointSet::default();
    for idx in order_by_confidence(&d.boxes) {
        let b = d.boxes[idx];
        match b.class_id {
            0..=3 => {
                let slot = &mut out.cal[b.class_id as usize];
                if slot.is_none() {
                    *slot = Some(b.center());
                }
            }
            _ => {
                if out.darts.len() < max_darts {
                    out.darts.push(b.center());
                    out.dart_confidences.push(b.confidence);
                }
            }
        }
    }
    out
}

/// Fills in a single missing calibration point.
///
/// The four calibration points are corners of a projected square with
/// cyclic adjacency 0-1-2-3; a missing corner is completed as a
/// parallelogram, `P_missing = P_prev + P_next - P_opposite`, which is
/// exact whenever the view is affine. With all four present this is the
/// identity; with two or more missing the set is not recoverable and the
/// caller scores the image 0.
pub fn complete_calibration<T: Scalar>(
    k: &KeypointSet<T>,
) -> Result<KeypointSet<T>, DetectionError> {
    let missing = k.n_missing_cal();
    match missing {
        0 => Ok(k.clone()),
        1 => {
            let mut out = k.clone();
            let i = out.cal.iter().position(|c| c.is_none()).unwrap();
            let prev = out.cal[(i + 3) % 4].unwrap();
            let next = out.cal[(i + 1) % 4].unwrap();
            let opposite = out.cal[(i + 2) % 4].unwrap();
            out.cal[i] = Some(prev + next - opposite);
            out.cal_recovered[i] = true;
            Ok(out)
        }
        _ => Err(DetectionError::NotRecoverable { missing }),
    }
}

/// Wraps keypoints in fixed-size square boxes (confidence 1.0) whose
/// centers encode the points; side length is `box_fraction` of the image.
pub fn keypoints_to_boxes<T: Scalar>(
    points: &[(PlanarPoint<T>, u8)],
    box_fraction: T,
    input_size: u32,
) -> Vec<KeypointBox<T>> {
    let side = box_fraction * T::c(f64::from(input_size));
    points
        .iter()
        .map(|&(p, class_id)| KeypointBox {
            class_id,
            cx: p.x,
            cy: p.y,
            w: side,
            h: side,
            confidence: T::one(),
        })
        .collect()
}

/// Inverse of [`keypoints_to_boxes`]: strips boxes back to their centers.
pub fn boxes_to_keypoints<T: Scalar>(boxes: &[KeypointBox<T>]) -> Vec<(PlanarPoint<T>, u8)> {
    boxes.iter().map(|b| (b.center(), b.class_id)).collect()
}
