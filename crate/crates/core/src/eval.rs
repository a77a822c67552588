//! Scoring-accuracy metrics and failure taxonomy.
//!
//! The headline metric is Percent Correct Score: the percentage of images
//! whose predicted dart total equals the labeled total. It compares sums,
//! not per-dart tokens, so compensating mistakes (a missed dart offset by
//! an overcounted one) count as correct — that is the metric's definition,
//! and the error taxonomy below exists to surface exactly such cases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{BoardSpec, ScoreToken};
use crate::detection::KeypointSet;
use crate::geometry::PlanarPoint;
use crate::scalar::Scalar;
use crate::scoring::{score_darts_full, ScoredKeypoints};

/// Default dart-matching threshold in normalized board units (about
/// 8.5 mm on a regulation board) — smaller than any ring gap that matters.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("cannot compute PCS of an empty dataset")]
    EmptyDataset,
}

/// Why a sample's predicted total missed the labeled total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorClass {
    /// Correct sample; no error.
    None,
    /// Calibration unusable (too few points) or suspect (more than one
    /// point had to be synthesized).
    CalMissing,
    /// Fewer darts predicted than labeled.
    FalseNegativeDart,
    /// More darts predicted than labeled.
    FalsePositiveDart,
    /// Dart counts match and darts matched up, but at least one matched
    /// dart got the wrong token.
    SectorMisclassified,
    /// Anything else: counts match yet the darts did not pair up.
    Mixed,
}

/// Per-image evaluation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEval {
    pub image_id: String,
    pub predicted_total: u32,
    pub label_total: u32,
    pub correct: bool,
    pub error_class: ErrorClass,
}

/// Counts of incorrect samples by failure class (correct samples are not
/// counted, so the sum equals the number of incorrect samples).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorHistogram {
    pub cal_missing: u64,
    pub false_negative_dart: u64,
    pub false_positive_dart: u64,
    pub sector_misclassified: u64,
    pub mixed: u64,
}

impl ErrorHistogram {
    pub fn record(&mut self, class: ErrorClass) {
        match class {
            ErrorClass::None => {}
            ErrorClass::CalMissing => self.cal_missing += 1,
            ErrorClass::FalseNegativeDart => self.false_negative_dart += 1,
            ErrorClass::FalsePositiveDart => self.false_positive_dart += 1,
            ErrorClass::SectorMisclassified => self.sector_misclassified += 1,
            ErrorClass::Mixed => self.mixed += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.cal_missing
            + self.false_negative_dart
            + self.false_positive_dart
            + self.sector_misclassified
            + self.mixed
    }
}

/// Pixel-error statistics over matched darts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DartLocStats {
    pub n_matched: u64,
    pub mean_px: Option<f64>,
    pub median_px: Option<f64>,
}

impl DartLocStats {
    /// Summarizes a set of matched-dart pixel distances.
    pub fn from_distances(mut distances: Vec<f64>) -> Self {
        if distances.is_empty() {
            return Self::default();
        }
        distances.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
        let n = distances.len();
        let mean = distances.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            distances[n / 2]
        } else {
            (distances[n / 2 - 1] + distances[n / 2]) / 2.0
        };
        Self { n_matched: n as u64, mean_px: Some(mean), median_px: Some(median) }
    }
}

/// Aggregate evaluation over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_samples: u64,
    pub pcs: f64,
    pub error_histogram: ErrorHistogram,
    pub dart_localization_stats: DartLocStats,
}

impl EvalReport {
    /// Builds the report from per-sample outcomes and matched-dart pixel
    /// distances.
    pub fn from_samples(samples: &[SampleEval], distances_px: Vec<f64>) -> Result<Self, EvalError> {
        let totals: Vec<(u32, u32)> =
            samples.iter().map(|s| (s.predicted_total, s.label_total)).collect();
        let pcs = compute_pcs(&totals)?;
        let mut hist = ErrorHistogram::default();
        for s in samples {
            hist.record(s.error_class);
        }
        Ok(Self {
            n_samples: samples.len() as u64,
            pcs,
            error_histogram: hist,
            dart_localization_stats: DartLocStats::from_distances(distances_px),
        })
    }
}

/// Percent Correct Score: 100 × (fraction of samples whose predicted total
/// equals the labeled total).
pub fn compute_pcs(totals: &[(u32, u32)]) -> Result<f64, EvalError> {
    if totals.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let correct = totals.iter().filter(|(pred, label)| pred == label).count();
    Ok(100.0 * correct as f64 / totals.len() as f64)
}

/// A matching between predicted and labeled dart positions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Matching<T> {
    /// (predicted index, label index, distance) per matched pair.
    pub pairs: Vec<(usize, usize, T)>,
    /// Predicted darts with no label partner: false positives.
    pub unmatched_pred: Vec<usize>,
    /// Labeled darts with no predicted partner: false negatives.
    pub unmatched_label: Vec<usize>,
}

/// Greedy nearest-neighbor matching, closest pairs first, each point used
/// at most once; pairs farther apart than `threshold` stay unmatched.
pub fn match_darts<T: Scalar>(
    pred: &[PlanarPoint<T>],
    label: &[PlanarPoint<T>],
    threshold: T,
) -> Matching<T> {
    let mut candidates: Vec<(usize, usize, T)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, l) in label.iter().enumerate() {
            let d = p.distance(l);
            if d <= threshold {
                candidates.push((i, j, d));
            }
        }
    }
    // Ascending distance; index order breaks exact ties deterministically.
    candidates.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .expect("distances are finite")
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut pred_used = vec![false; pred.len()];
    let mut label_used = vec![false; label.len()];
    let mut pairs = Vec::new();
    for (i, j, d) in candidates {
        if !pred_used[i] && !label_used[j] {
            pred_used[i] = true;
            label_used[j] = true;
            pairs.push((i, j, d));
        }
    }
    Matching {
        pairs,
        unmatched_pred: (0..pred.len()).filter(|&i| !pred_used[i]).collect(),
        unmatched_label: (0..label.len()).filter(|&j| !label_used[j]).collect(),
    }
}

/// The facts about one evaluated sample that the failure taxonomy needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchedSample {
    pub correct: bool,
    pub calibration_failed: bool,
    pub n_cal_recovered: usize,
    pub n_pred_darts: usize,
    pub n_label_darts: usize,
    /// True when some matched pred/label dart pair scored different tokens.
    pub matched_token_mismatch: bool,
}

/// Deterministic failure-classification tree, checked in a fixed order so
/// the histogram is reproducible.
pub fn classify_errors(s: &MatchedSample) -> ErrorClass {
    if s.correct {
        ErrorClass::None
    } else if s.calibration_failed || s.n_cal_recovered > 1 {
        ErrorClass::CalMissing
    } else if s.n_pred_darts < s.n_label_darts {
        ErrorClass::FalseNegativeDart
    } else if s.n_pred_darts > s.n_label_darts {
        ErrorClass::FalsePositiveDart
    } else if s.matched_token_mismatch {
        ErrorClass::SectorMisclassified
    } else {
        ErrorClass::Mixed
    }
}

/// Evaluates one image: predicted keypoints against labeled keypoints.
///
/// The label total comes from `label_tokens` when provided (trusted
/// annotations), otherwise from scoring the labeled keypoints. Darts are
/// matched in board-plane coordinates, each side rectified by its own
/// calibration; matched distances are reported in image pixels.
pub fn evaluate_sample<T: Scalar>(
    image_id: &str,
    pred: &KeypointSet<T>,
    label: &KeypointSet<T>,
    label_tokens: Option<&[ScoreToken]>,
    spec: &BoardSpec<T>,
    match_threshold: T,
) -> (SampleEval, Vec<f64>) {
    let pred_full = score_darts_full(pred, spec);
    let label_full = score_darts_full(label, spec);
    let label_total = match label_tokens {
        Some(tokens) => tokens.iter().map(ScoreToken::value).sum(),
        None => label_full.result.total,
    };
    let predicted_total = pred_full.result.total;
    let correct = predicted_total == label_total;

    let (matching, distances_px) = match_in_board_plane(pred, label, &pred_full, &label_full, match_threshold);
    let matched_token_mismatch = matching.pairs.iter().any(|&(pi, li, _)| {
        let pred_token = pred_full.result.tokens.get(pi);
        let label_token = match label_tokens {
            Some(tokens) => tokens.get(li),
            None => label_full.result.tokens.get(li),
        };
        pred_token != label_token
    });
    let sample = MatchedSample {
        correct,
        calibration_failed: pred_full.result.calibration_failed,
        n_cal_recovered: pred.cal_recovered.iter().filter(|&&r| r).count(),
        n_pred_darts: pred.darts.len(),
        n_label_darts: label.darts.len(),
        matched_token_mismatch,
    };
    let eval = SampleEval {
        image_id: image_id.to_string(),
        predicted_total,
        label_total,
        correct,
        error_class: classify_errors(&sample),
    };
    (eval, distances_px)
}

/// Matches darts in the board plane and measures matched distances in
/// image pixels. No usable calibration on either side means no matching.
fn match_in_board_plane<T: Scalar>(
    pred: &KeypointSet<T>,
    label: &KeypointSet<T>,
    pred_full: &ScoredKeypoints<T>,
    label_full: &ScoredKeypoints<T>,
    threshold: T,
) -> (Matching<T>, Vec<f64>) {
    if pred_full.calibration.is_none() || label_full.calibration.is_none() {
        return (
            Matching {
                pairs: Vec::new(),
                unmatched_pred: (0..pred.darts.len()).collect(),
                unmatched_label: (0..label.darts.len()).collect(),
            },
            Vec::new(),
        );
    }
    // Darts past the horizon get a far-away sentinel so they never match.
    let sentinel = PlanarPoint::new(T::c(1e9), T::c(1e9));
    let pred_board: Vec<PlanarPoint<T>> =
        pred_full.board_points.iter().map(|bp| bp.unwrap_or(sentinel)).collect();
    let label_board: Vec<PlanarPoint<T>> =
        label_full.board_points.iter().map(|bp| bp.unwrap_or(sentinel)).collect();
    let matching = match_darts(&pred_board, &label_board, threshold);
    let distances_px = matching
        .pairs
        .iter()
        .map(|&(pi, li, _)| {
            pred.darts[pi].distance(&label.darts[li]).to_f64().unwrap_or(f64::NAN)
        })
        .collect();
    (matching, distances_px)
}
