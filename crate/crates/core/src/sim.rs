//! Synthetic scene generator and noisy-detector model.
//!
//! A scene is a known board pose plus darts with known ground-truth
//! tokens; corrupting it yields detector-like output. Running the full
//! post-processing/scoring pipeline over noiseless corruptions must
//! reproduce every ground-truth total — that composition is the end-to-end
//! oracle the acceptance tests lean on — and the noise knobs turn the same
//! machinery into a robustness harness.

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rand_distr::{Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{BoardSpec, ScoreToken};
use crate::detection::{
    keypoints_to_boxes, nms, resolve_keypoints, DetectionSet, KeypointBox, DEFAULT_CONF_THRESHOLD,
    DEFAULT_IOU_THRESHOLD, DEFAULT_MAX_DARTS,
};
use crate::eval::{match_darts, DEFAULT_MATCH_THRESHOLD};
use crate::geometry::{Homography, PlanarPoint};
use crate::rng::{grid_stream, substream_rng};
use crate::scoring::{boundary_distance, classify_board_point, score_darts_full};

type P = PlanarPoint<f64>;

/// Board radius as a fraction of image size at pose scale 1.
pub const BASE_RADIUS_FRACTION: f64 = 0.4;

/// Bound on the drawn pose perspective terms (bottom row of the pose
/// matrix, in board-plane units) at full strength.
pub const PERSPECTIVE_REF: f64 = 0.3;

const SAMPLE_RETRIES: u32 = 64;

/// Simulator failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("scene constraints unsatisfied after {0} retries ({1})")]
    RetryExhausted(u32, &'static str),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

/// Scene-generation knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub image_size: u32,
    /// Pose perspective strength: the non-diagonal pose entries are scaled
    /// by factors from Uniform[0, rho]. 0 gives face-on affine poses.
    pub rho: f64,
    /// Board scale relative to [`BASE_RADIUS_FRACTION`] of the image.
    pub scale_range: (f64, f64),
    /// In-plane pose rotation range, degrees.
    pub max_rotation_deg: f64,
    /// Board-center offset from image center, fraction of image size.
    pub max_translation_frac: f64,
    /// Weights of the dart-count distribution over {0, 1, 2, 3}.
    pub dart_count_weights: [f64; 4],
    /// Dart-position mixture weights: uniform over the scoring area, the
    /// treble-20 cell, and the treble-19 cell.
    pub dart_mixture_weights: [f64; 3],
    /// Minimum normalized distance of sampled darts from any
    /// classification boundary.
    pub boundary_margin: f64,
    /// Minimum image-plane distance between darts, pixels. Keep this
    /// above √2 × the keypoint box side, or same-class suppression can
    /// legitimately swallow a true dart and the noiseless oracle breaks.
    pub min_dart_separation_px: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            image_size: 800,
            rho: 1.0,
            scale_range: (0.75, 1.05),
            max_rotation_deg: 2.0,
            max_translation_frac: 0.04,
            dart_count_weights: [0.1, 0.2, 0.2, 0.5],
            dart_mixture_weights: [0.5, 0.25, 0.25],
            boundary_margin: 1e-6,
            min_dart_separation_px: 30.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: String| Err(SimError::InvalidConfig(m));
        if self.image_size == 0 {
            return err("image_size must be positive".into());
        }
        if self.rho < 0.0 {
            return err(format!("rho {} is negative", self.rho));
        }
        if !(0.0 < self.scale_range.0 && self.scale_range.0 <= self.scale_range.1) {
            return err(format!("scale_range {:?} is not an ordered positive range", self.scale_range));
        }
        if self.dart_count_weights.iter().any(|&w| w < 0.0)
            || self.dart_count_weights.iter().sum::<f64>() <= 0.0
        {
            return err("dart_count_weights must be nonnegative with positive sum".into());
        }
        if self.dart_mixture_weights.iter().any(|&w| w < 0.0)
            || self.dart_mixture_weights.iter().sum::<f64>() <= 0.0
        {
            return err("dart_mixture_weights must be nonnegative with positive sum".into());
        }
        if self.boundary_margin < 0.0 {
            return err("boundary_margin must be nonnegative".into());
        }
        if self.min_dart_separation_px < 0.0 {
            return err("min_dart_separation_px must be nonnegative".into());
        }
        Ok(())
    }
}

/// Detector corruption knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Isotropic Gaussian localization noise, pixels per axis.
    pub sigma_px: f64,
    /// Per-keypoint drop probability.
    pub p_miss: f64,
    /// Expected count of spurious dart boxes (Poisson).
    pub fp_rate: f64,
    /// Also emit spurious boxes with calibration classes.
    #[serde(default)]
    pub cal_false_positives: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { sigma_px: 0.0, p_miss: 0.0, fp_rate: 0.0, cal_false_positives: false }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.sigma_px < 0.0 || self.fp_rate < 0.0 || !(0.0..1.0).contains(&self.p_miss) {
            return Err(SimError::InvalidConfig(format!(
                "noise model out of range: sigma_px {}, p_miss {}, fp_rate {}",
                self.sigma_px, self.p_miss, self.fp_rate
            )));
        }
        Ok(())
    }
}

/// Confidence range assigned to kept (true) keypoints.
const CONF_KEPT: (f64, f64) = (0.6, 1.0);
/// Confidence range assigned to spurious boxes.
const CONF_SPURIOUS: (f64, f64) = (0.25, 0.6);

/// One synthetic capture with full ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub scene_id: u64,
    /// Board plane → image.
    pub pose: Homography<f64>,
    pub image_size: u32,
    pub dart_positions_board: Vec<P>,
    pub true_tokens: Vec<ScoreToken>,
    pub cal_image: [P; 4],
    pub darts_image: Vec<P>,
}

impl Scene {
    pub fn true_total(&self) -> u32 {
        self.true_tokens.iter().map(ScoreToken::value).sum()
    }
}

/// Draws an index with the given nonnegative weights.
fn weighted_index<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Draws a board pose: centered rotation/scale/perspective with its
/// non-diagonal entries damped by Uniform[0, rho] factors, then a
/// translation to near the image center.
fn draw_pose<R: Rng>(config: &SceneConfig, rng: &mut R) -> Homography<f64> {
    let size = f64::from(config.image_size);
    let rot = rng.random_range(-config.max_rotation_deg..=config.max_rotation_deg);
    let scale =
        BASE_RADIUS_FRACTION * size * rng.random_range(config.scale_range.0..=config.scale_range.1);
    let p0 = rng.random_range(-PERSPECTIVE_REF..=PERSPECTIVE_REF);
    let q0 = rng.random_range(-PERSPECTIVE_REF..=PERSPECTIVE_REF);
    let perspective = Homography::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [p0, q0, 1.0]]);
    let mut centered = perspective
        .then(&Homography::scaling(scale))
        .then(&Homography::rotation_cw_deg(rot));
    for r in 0..3 {
        for c in 0..3 {
            if r != c {
                centered.m[r][c] *= rng.random_range(0.0..=config.rho.max(0.0).min(f64::MAX));
            }
        }
    }
    let tx = size * (0.5 + rng.random_range(-config.max_translation_frac..=config.max_translation_frac));
    let ty = size * (0.5 + rng.random_range(-config.max_translation_frac..=config.max_translation_frac));
    centered.then(&Homography::translation(tx, ty))
}

/// True when the pose maps the whole closed unit disk inside the image.
///
/// The coordinate extremes of the disk's image lie on the image of its
/// boundary circle, so checking the circle densely suffices.
fn disk_inside_image(pose: &Homography<f64>, image_size: u32) -> bool {
    let size = f64::from(image_size);
    const N: usize = 72;
    for i in 0..N {
        let a = i as f64 / N as f64 * std::f64::consts::TAU;
        let p = match pose.apply(P::new(a.cos(), a.sin())) {
            Ok(p) => p,
            Err(_) => return false,
        };
        if !(p.x >= 0.0 && p.x <= size && p.y >= 0.0 && p.y <= size) {
            return false;
        }
    }
    true
}

/// Draws one dart position from the configured mixture, away from any
/// classification boundary.
fn draw_dart<R: Rng>(
    config: &SceneConfig,
    spec: &BoardSpec<f64>,
    rng: &mut R,
) -> Result<P, SimError> {
    // Treble-cell angular spans, clockwise degrees: the sector centered at
    // a given wedge index spans (18·idx − 9, 18·idx + 9).
    let wedge = |sector: u8| {
        let idx = spec.sector_index(sector).expect("sector exists") as f64;
        (18.0 * idx - 9.0, 18.0 * idx + 9.0)
    };
    for _ in 0..SAMPLE_RETRIES {
        let p = match weighted_index(&config.dart_mixture_weights, rng) {
            0 => {
                // Area-uniform over the scoring disk r ≤ 1.
                let r = rng.random_range(0.0..1.0f64).sqrt();
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                P::new(r * theta.sin(), -r * theta.cos())
            }
            hot => {
                let sector = if hot == 1 { 20 } else { 19 };
                let (lo, hi) = wedge(sector);
                let theta = rng.random_range(lo..hi).to_radians();
                let r = rng.random_range(spec.r_treble_inner..spec.r_treble_outer);
                P::new(r * theta.sin(), -r * theta.cos())
            }
        };
        if boundary_distance(p, spec) >= config.boundary_margin {
            return Ok(p);
        }
    }
    Err(SimError::RetryExhausted(SAMPLE_RETRIES, "dart away from boundaries"))
}

/// Samples one scene: a pose keeping the whole board in frame, darts from
/// the configured mixture, and their ground-truth tokens.
pub fn sample_scene<R: Rng>(
    rng: &mut R,
    config: &SceneConfig,
    spec: &BoardSpec<f64>,
    scene_id: u64,
) -> Result<Scene, SimError> {
    config.validate()?;
    let mut pose = None;
    for _ in 0..SAMPLE_RETRIES {
        let candidate = draw_pose(config, rng);
        if candidate.is_degenerate() || !disk_inside_image(&candidate, config.image_size) {
            continue;
        }
        pose = Some(candidate);
        break;
    }
    let pose = pose.ok_or(SimError::RetryExhausted(SAMPLE_RETRIES, "board inside image"))?;

    let apply = |p: P| pose.apply(p).expect("pose keeps board points finite");
    let n_darts = weighted_index(&config.dart_count_weights, rng);
    let mut dart_positions_board: Vec<P> = Vec::with_capacity(n_darts);
    let mut darts_image: Vec<P> = Vec::with_capacity(n_darts);
    for _ in 0..n_darts {
        let mut placed = false;
        for _ in 0..SAMPLE_RETRIES {
            let board = draw_dart(config, spec, rng)?;
            let img = apply(board);
            if darts_image.iter().all(|d| d.distance(&img) >= config.min_dart_separation_px) {
                dart_positions_board.push(board);
                darts_image.push(img);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SimError::RetryExhausted(SAMPLE_RETRIES, "darts separated in image"));
        }
    }
    let true_tokens: Vec<ScoreToken> = dart_positions_board
        .iter()
        .map(|&p| classify_board_point(p, spec))
        .collect();
    Ok(Scene {
        scene_id,
        cal_image: spec.cal_point_targets.map(apply),
        darts_image,
        pose,
        image_size: config.image_size,
        dart_positions_board,
        true_tokens,
    })
}

/// Corrupts a scene into detector-like output: drops keypoints, jitters
/// survivors, adds spurious dart boxes, and assigns confidences.
pub fn corrupt<R: Rng>(
    scene: &Scene,
    noise: &NoiseModel,
    box_fraction: f64,
    rng: &mut R,
) -> DetectionSet<f64> {
    let size = f64::from(scene.image_size);
    let gauss = Normal::new(0.0, noise.sigma_px).expect("sigma_px is nonnegative");
    let conf_kept = Uniform::new_inclusive(CONF_KEPT.0, CONF_KEPT.1).expect("static range");
    let conf_spurious =
        Uniform::new_inclusive(CONF_SPURIOUS.0, CONF_SPURIOUS.1).expect("static range");

    let mut points: Vec<(P, u8, f64)> = Vec::new();
    let perturb = |p: P, class_id: u8, points: &mut Vec<(P, u8, f64)>, rng: &mut R| {
        if rng.random_bool(noise.p_miss) {
            return;
        }
        let q = P::new(
            (p.x + gauss.sample(rng)).clamp(0.0, size),
            (p.y + gauss.sample(rng)).clamp(0.0, size),
        );
        points.push((q, class_id, conf_kept.sample(rng)));
    };
    for (i, &p) in scene.cal_image.iter().enumerate() {
        perturb(p, i as u8, &mut points, rng);
    }
    for &p in &scene.darts_image {
        perturb(p, 4, &mut points, rng);
    }

    if noise.fp_rate > 0.0 {
        let poisson = Poisson::new(noise.fp_rate).expect("fp_rate is positive");
        let n_spurious = poisson.sample(rng) as u64;
        for _ in 0..n_spurious {
            // Uniform over the board region of the image: draw in the
            // board plane, push through the pose.
            let r = rng.random_range(0.0..1.0f64).sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let board = P::new(r * theta.sin(), -r * theta.cos());
            let img = scene.pose.apply(board).expect("pose keeps board points finite");
            let class_id = if noise.cal_false_positives { rng.random_range(0..=4u8) } else { 4 };
            points.push((img, class_id, conf_spurious.sample(rng)));
        }
    }

    let confidences: Vec<f64> = points.iter().map(|&(_, _, c)| c).collect();
    let keypoints: Vec<(P, u8)> = points.iter().map(|&(p, cls, _)| (p, cls)).collect();
    let mut boxes: Vec<KeypointBox<f64>> =
        keypoints_to_boxes(&keypoints, box_fraction, scene.image_size);
    for (b, conf) in boxes.iter_mut().zip(confidences) {
        b.confidence = conf;
    }
    DetectionSet {
        image_id: format!("scene_{:06}", scene.scene_id),
        input_size: scene.image_size,
        boxes,
    }
}

/// One sweep grid cell's aggregate results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma_px: f64,
    pub p_miss: f64,
    pub fp_rate: f64,
    pub n_scenes: u64,
    pub pcs: f64,
    /// Mean image-plane distance of matched predicted darts to ground
    /// truth; absent when nothing matched.
    pub mean_loc_err_px: Option<f64>,
}

/// Pipeline outcome for a single corrupted scene.
struct SceneOutcome {
    correct: bool,
    loc_err_px: Vec<f64>,
}

/// Runs the full pipeline over one corrupted scene and compares against
/// ground truth.
fn run_scene(
    config: &SceneConfig,
    noise: &NoiseModel,
    spec: &BoardSpec<f64>,
    box_fraction: f64,
    seed: u64,
    stream: u64,
    scene_id: u64,
) -> Result<SceneOutcome, SimError> {
    let mut rng = substream_rng(seed, stream);
    let scene = sample_scene(&mut rng, config, spec, scene_id)?;
    let detections = corrupt(&scene, noise, box_fraction, &mut rng);
    let kept = nms(&detections.boxes, DEFAULT_IOU_THRESHOLD, DEFAULT_CONF_THRESHOLD);
    let resolved = resolve_keypoints(
        &DetectionSet { boxes: kept, ..detections },
        DEFAULT_MAX_DARTS,
    );
    let scored = score_darts_full(&resolved, spec);
    let correct = scored.result.total == scene.true_total();

    // Localization: match predicted darts to ground truth in the board
    // plane, report matched distances in image pixels.
    let mut loc_err_px = Vec::new();
    if scored.calibration.is_some() {
        let sentinel = P::new(1e9, 1e9);
        let pred_board: Vec<P> =
            scored.board_points.iter().map(|bp| bp.unwrap_or(sentinel)).collect();
        let matching =
            match_darts(&pred_board, &scene.dart_positions_board, DEFAULT_MATCH_THRESHOLD);
        for &(pi, li, _) in &matching.pairs {
            loc_err_px.push(resolved.darts[pi].distance(&scene.darts_image[li]));
        }
    }
    Ok(SceneOutcome { correct, loc_err_px })
}

/// Runs the pipeline over a parameter grid (cartesian product of the
/// sigma/p_miss/fp_rate lists), `n_scenes` scenes per cell.
///
/// Scenes run in parallel; every scene's generator is derived from
/// (seed, cell, scene index), so results do not depend on thread count.
pub fn run_sweep(
    sigmas: &[f64],
    p_misses: &[f64],
    fp_rates: &[f64],
    n_scenes: u64,
    seed: u64,
    config: &SceneConfig,
    spec: &BoardSpec<f64>,
    box_fraction: f64,
) -> Result<Vec<SweepRow>, SimError> {
    if n_scenes == 0 {
        return Err(SimError::InvalidConfig("n_scenes must be at least 1".into()));
    }
    config.validate()?;
    let mut rows = Vec::new();
    let mut cell_idx: u32 = 0;
    for &sigma_px in sigmas {
        for &p_miss in p_misses {
            for &fp_rate in fp_rates {
                let noise = NoiseModel { sigma_px, p_miss, fp_rate, cal_false_positives: false };
                noise.validate()?;
                let outcomes: Result<Vec<SceneOutcome>, SimError> = (0..n_scenes)
                    .into_par_iter()
                    .map(|i| {
                        run_scene(
                            config,
                            &noise,
                            spec,
                            box_fraction,
                            seed,
                            grid_stream(cell_idx, i as u32),
                            i,
                        )
                    })
                    .collect();
                let outcomes = outcomes?;
                let n_correct = outcomes.iter().filter(|o| o.correct).count();
                let dists: Vec<f64> =
                    outcomes.iter().flat_map(|o| o.loc_err_px.iter().copied()).collect();
                rows.push(SweepRow {
                    sigma_px,
                    p_miss,
                    fp_rate,
                    n_scenes,
                    pcs: 100.0 * n_correct as f64 / n_scenes as f64,
                    mean_loc_err_px: if dists.is_empty() {
                        None
                    } else {
                        Some(dists.iter().sum::<f64>() / dists.len() as f64)
                    },
                });
                cell_idx += 1;
            }
        }
    }
    Ok(rows)
}
