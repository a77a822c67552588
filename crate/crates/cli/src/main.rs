//! `dartscore`: score, evaluate, augment, simulate, and render dartboard
//! keypoint data from the command line.
//!
//! Exit codes: 0 on success, 1 on validation failure, 2 on usage errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dartscore_core::augment::{apply_augment_with_rng, AugmentStrategy};
use dartscore_core::board::{default_board_spec, BoardSpec, ScoreToken};
use dartscore_core::detection::{
    complete_calibration, keypoints_to_boxes, nms, resolve_keypoints, DetectionSet, KeypointSet,
};
use dartscore_core::eval::{evaluate_sample, EvalReport, SampleEval};
use dartscore_core::io::svg::{render_overlay, render_sweep_chart, OverlayScene, SweepAxis};
use dartscore_core::io::{
    export_label_lines, load_annotations_lenient, load_board_spec, load_detections,
    load_run_config, save_annotations, save_detections, save_eval_report, save_sample_csv,
    save_sweep_csv, write_atomic, AnnotationRecord, RunConfig,
};
use dartscore_core::rng::substream_rng;
use dartscore_core::scoring::score_darts_full;
use dartscore_core::sim::{corrupt, run_sweep, sample_scene, NoiseModel, SceneConfig};

#[derive(Parser)]
#[command(
    name = "dartscore",
    version,
    about = "Geometry, scoring, augmentation, and evaluation for dartboard keypoint detections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score detection files: fit the board homography and read off dart totals.
    Score(ScoreArgs),
    /// Compare detections against labeled annotations and report PCS.
    Evaluate(EvaluateArgs),
    /// Apply randomized augmentation strategies to annotation records.
    Augment(AugmentArgs),
    /// Generate synthetic labeled scenes and (optionally noisy) detections.
    Simulate(SimulateArgs),
    /// Run a noise-parameter sweep and report PCS per grid cell.
    Sweep(SweepArgs),
    /// Export detector-training label files from annotations.
    ExportLabels(ExportLabelsArgs),
    /// Render per-image SVG overlays of the fitted board and keypoints.
    Render(RenderArgs),
}

/// Flags shared by commands that run the detection → scoring pipeline.
#[derive(Args)]
struct PipelineArgs {
    /// Board-spec JSON file; omitted means the standard board.
    #[arg(long)]
    board_spec: Option<PathBuf>,
    /// Run-config JSON file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    iou_threshold: Option<f64>,
    #[arg(long)]
    conf_threshold: Option<f64>,
    #[arg(long)]
    max_darts: Option<usize>,
}

struct Pipeline {
    spec: BoardSpec<f64>,
    iou_threshold: f64,
    conf_threshold: f64,
    max_darts: usize,
}

impl PipelineArgs {
    fn resolve(&self) -> Result<Pipeline> {
        let config = match &self.config {
            Some(path) => load_run_config(path)?,
            None => RunConfig::default(),
        };
        let spec = match self.board_spec.as_deref() {
            Some(path) => load_board_spec(path)?,
            None => match &config.board_spec {
                Some(path) => load_board_spec(Path::new(path))?,
                None => default_board_spec(),
            },
        };
        Ok(Pipeline {
            spec,
            iou_threshold: self.iou_threshold.unwrap_or(config.iou_threshold),
            conf_threshold: self.conf_threshold.unwrap_or(config.conf_threshold),
            max_darts: self.max_darts.unwrap_or(config.max_darts),
        })
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Detection JSON file, or a directory of them.
    #[arg(long)]
    detections: PathBuf,
    /// Output JSON Lines file, one scored image per line.
    #[arg(long)]
    out: PathBuf,
    /// Report invalid detection files and continue instead of failing.
    #[arg(long)]
    lenient: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Annotation JSON Lines file.
    #[arg(long)]
    labels: PathBuf,
    /// Detection JSON file, or a directory of them.
    #[arg(long)]
    detections: PathBuf,
    /// Output report JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Per-sample CSV path; defaults to the report path with a .csv extension.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Dart match threshold in normalized board units.
    #[arg(long, default_value_t = 0.05)]
    match_threshold: f64,
    /// Report invalid label records and continue instead of failing.
    #[arg(long)]
    lenient: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct AugmentArgs {
    /// Annotation JSON Lines file.
    #[arg(long)]
    labels: PathBuf,
    /// Output JSON Lines file of augmented records.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated strategies from flip, rot18, rot36, smallrot, warp,
    /// jitter; empty means pass records through unchanged.
    #[arg(long, default_value = "")]
    ops: String,
    /// Perspective-warp strength (scale-factor draws come from [0, rho]).
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Per-op application probability.
    #[arg(long, default_value_t = 1.0)]
    probability: f64,
    /// Seed for all randomness; one substream per record.
    #[arg(long, required = true)]
    seed: u64,
    /// Directory of source rasters named by each record's image field.
    #[arg(long, requires = "out_images")]
    images: Option<PathBuf>,
    /// Directory for warped rasters (requires --images).
    #[arg(long, requires = "images")]
    out_images: Option<PathBuf>,
    /// Report unusable records and continue instead of failing.
    #[arg(long)]
    lenient: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of scenes to generate.
    #[arg(long)]
    scenes: u64,
    #[arg(long, required = true)]
    seed: u64,
    /// Gaussian keypoint noise, pixels.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Per-keypoint drop probability.
    #[arg(long, default_value_t = 0.0)]
    p_miss: f64,
    /// Expected spurious boxes per image.
    #[arg(long, default_value_t = 0.0)]
    fp_rate: f64,
    /// Also draw spurious calibration-class boxes, not just darts.
    #[arg(long)]
    cal_false_positives: bool,
    #[arg(long, default_value_t = 800)]
    image_size: u32,
    /// Pose perspective strength.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.025)]
    box_fraction: f64,
    /// Ground-truth annotation JSON Lines output.
    #[arg(long)]
    out_labels: PathBuf,
    /// Directory for per-scene detection JSON files.
    #[arg(long)]
    out_detections: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenes per grid cell.
    #[arg(long)]
    scenes: u64,
    #[arg(long, required = true)]
    seed: u64,
    /// Comma-separated sigma_px values.
    #[arg(long, default_value = "0")]
    sigma: String,
    /// Comma-separated p_miss values.
    #[arg(long, default_value = "0")]
    p_miss: String,
    /// Comma-separated fp_rate values.
    #[arg(long, default_value = "0")]
    fp_rate: String,
    #[arg(long, default_value_t = 800)]
    image_size: u32,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.025)]
    box_fraction: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG chart of PCS against the swept parameter.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ExportLabelsArgs {
    /// Annotation JSON Lines file.
    #[arg(long)]
    labels: PathBuf,
    /// Detector input size keypoints are rescaled to.
    #[arg(long, default_value_t = 800)]
    input_size: u32,
    /// Keypoint box side as a fraction of the input size.
    #[arg(long, default_value_t = 0.025)]
    box_fraction: f64,
    /// Directory for per-image label text files.
    #[arg(long)]
    out_dir: PathBuf,
    /// Report invalid records and continue instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct RenderInputArgs {
    /// Annotation JSON Lines file to render.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Detection JSON file or directory to render.
    #[arg(long)]
    detections: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    input: RenderInputArgs,
    /// Directory for per-image SVG files.
    #[arg(long)]
    out_dir: PathBuf,
    /// Report invalid inputs and continue instead of failing.
    #[arg(long)]
    lenient: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::ExportLabels(args) => cmd_export_labels(args),
        Command::Render(args) => cmd_render(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

// ------------------------------------------------------------------ score

#[derive(Serialize)]
struct ScoreLine {
    image: String,
    tokens: Vec<ScoreToken>,
    total: u32,
    calibration_failed: bool,
}

/// Lists detection inputs: the file itself, or `*.json` within a
/// directory in filename order.
fn detection_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Loads detection sets, either failing on the first invalid file or
/// reporting and skipping it.
fn load_detection_inputs(path: &Path, lenient: bool) -> Result<Vec<DetectionSet<f64>>> {
    let mut out = Vec::new();
    for file in detection_files(path)? {
        match load_detections(&file) {
            Ok(d) => out.push(d),
            Err(e) if lenient => eprintln!("skipping: {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// Runs suppression, resolution, and calibration completion, returning
/// the keypoints ready for scoring and rendering.
fn resolve_for_scoring(d: &DetectionSet<f64>, p: &Pipeline) -> KeypointSet<f64> {
    let survivors = nms(&d.boxes, p.iou_threshold, p.conf_threshold);
    let resolved = resolve_keypoints(
        &DetectionSet { image_id: d.image_id.clone(), input_size: d.input_size, boxes: survivors },
        p.max_darts,
    );
    // One missing corner is recoverable; anything worse is left for the
    // scorer to report as a calibration failure.
    complete_calibration(&resolved).unwrap_or(resolved)
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let pipeline = args.pipeline.resolve()?;
    let detections = load_detection_inputs(&args.detections, args.lenient)?;
    let mut out = String::new();
    for d in &detections {
        let keypoints = resolve_for_scoring(d, &pipeline);
        let scored = score_darts_full(&keypoints, &pipeline.spec);
        let line = ScoreLine {
            image: d.image_id.clone(),
            tokens: scored.result.tokens,
            total: scored.result.total,
            calibration_failed: scored.result.calibration_failed,
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    write_atomic(&args.out, out.as_bytes())?;
    Ok(())
}

// --------------------------------------------------------------- evaluate

fn load_labels(path: &Path, lenient: bool) -> Result<Vec<AnnotationRecord>> {
    let (records, errors) = load_annotations_lenient(path)?;
    if !errors.is_empty() {
        if !lenient {
            bail!("{}", errors[0]);
        }
        for e in &errors {
            eprintln!("skipping: {e}");
        }
    }
    Ok(records)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let pipeline = args.pipeline.resolve()?;
    let labels = load_labels(&args.labels, args.lenient)?;
    let detections = load_detection_inputs(&args.detections, args.lenient)?;
    let by_image: BTreeMap<&str, &DetectionSet<f64>> =
        detections.iter().map(|d| (d.image_id.as_str(), d)).collect();

    let missing: Vec<&str> = labels
        .iter()
        .filter(|r| !by_image.contains_key(r.image.as_str()))
        .map(|r| r.image.as_str())
        .collect();
    if !missing.is_empty() {
        bail!(
            "missing detections for {} label image(s): {}",
            missing.len(),
            missing.join(", ")
        );
    }

    let mut samples: Vec<SampleEval> = Vec::new();
    let mut distances: Vec<f64> = Vec::new();
    for record in &labels {
        let d = by_image[record.image.as_str()];
        let pred = resolve_for_scoring(d, &pipeline);
        let label = record.to_keypoints();
        let (sample, dist) = evaluate_sample(
            &record.image,
            &pred,
            &label,
            record.scores.as_deref(),
            &pipeline.spec,
            args.match_threshold,
        );
        samples.push(sample);
        distances.extend(dist);
    }

    let report = EvalReport::from_samples(&samples, distances)
        .map_err(|e| anyhow!("building report: {e}"))?;
    save_eval_report(&args.out, &report)?;
    let csv_path = args.csv.unwrap_or_else(|| args.out.with_extension("csv"));
    save_sample_csv(&csv_path, &samples)?;
    println!("pcs {} over {} samples", report.pcs, report.n_samples);
    Ok(())
}

// ---------------------------------------------------------------- augment

/// Parses the --ops grammar. Unknown names are usage errors (exit 2).
fn parse_ops(ops: &str, rho: f64) -> Result<Vec<AugmentStrategy<f64>>, String> {
    let mut strategies = Vec::new();
    for name in ops.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        strategies.push(match name {
            "flip" => AugmentStrategy::Flip,
            "rot18" => AugmentStrategy::BoardRotate { step_deg: 18 },
            "rot36" => AugmentStrategy::BoardRotate { step_deg: 36 },
            "smallrot" => AugmentStrategy::SmallRotate { max_angle_deg: 2.0 },
            "warp" => AugmentStrategy::Warp { rho },
            "jitter" => AugmentStrategy::Jitter { max_frac: 0.02 },
            other => return Err(format!("unknown augmentation op {other:?}")),
        });
    }
    Ok(strategies)
}

fn cmd_augment(args: AugmentArgs) -> Result<()> {
    let strategies = match parse_ops(&args.ops, args.rho) {
        Ok(s) => s,
        Err(msg) => {
            // Bad grammar in a flag value is a usage error, not a data error.
            eprintln!("error: {msg} (choose from flip, rot18, rot36, smallrot, warp, jitter)");
            std::process::exit(2);
        }
    };
    if !(0.0..=1.0).contains(&args.probability) {
        eprintln!("error: --probability {} outside [0, 1]", args.probability);
        std::process::exit(2);
    }
    let pipeline = args.pipeline.resolve()?;
    let records = load_labels(&args.labels, args.lenient)?;

    // No ops: a pure pass-through, byte-identical keypoints and scores.
    if strategies.is_empty() {
        save_annotations(&args.out, &records)?;
        return Ok(());
    }

    let mut out_records = Vec::with_capacity(records.len());
    for (idx, record) in records.iter().enumerate() {
        match augment_record(record, idx as u64, &strategies, &args, &pipeline) {
            Ok(r) => out_records.push(r),
            Err(e) if args.lenient => eprintln!("skipping {}: {e:#}", record.image),
            Err(e) => return Err(e.context(format!("record {} ({})", idx + 1, record.image))),
        }
    }
    save_annotations(&args.out, &out_records)?;
    Ok(())
}

fn augment_record(
    record: &AnnotationRecord,
    idx: u64,
    strategies: &[AugmentStrategy<f64>],
    args: &AugmentArgs,
    pipeline: &Pipeline,
) -> Result<AnnotationRecord> {
    let completed = complete_calibration(&record.to_keypoints())
        .map_err(|e| anyhow!("augmentation needs calibration: {e}"))?;
    let cal = std::array::from_fn(|i| completed.cal[i].expect("completed"));

    // The output record must satisfy its own bounds invariant or the
    // toolchain could not read it back — and the warp routinely leaves the
    // frame, since shrinking its factors also damps the translation part
    // of the inverse map and slides the board toward the origin. Framing
    // is presentation, not geometry: a final minimal translation (applied
    // to keypoints and raster alike, scores unchanged) brings the result
    // back into view. Only a board too large for the frame forces a
    // redraw; the generator advances across redraws, so a fixed seed
    // still reproduces the same output.
    const DRAW_LIMIT: u32 = 32;
    let mut rng = substream_rng(args.seed, idx);
    let (w, h) = (f64::from(record.width), f64::from(record.height));
    let mut accepted = None;
    for _ in 0..DRAW_LIMIT {
        let mut candidate = {
            let ops: Vec<_> = strategies.iter().map(|s| s.sample(&mut rng)).collect();
            apply_augment_with_rng(
                &ops,
                args.probability,
                &mut rng,
                &cal,
                &completed.darts,
                &pipeline.spec.cal_point_targets,
                record.width,
            )?
        };
        let written: Vec<dartscore_core::Point> = candidate
            .cal_out
            .iter()
            .enumerate()
            .filter(|&(i, _)| record.cal[i].is_some())
            .map(|(_, p)| *p)
            .chain(candidate.darts_out.iter().copied())
            .collect();
        let min = |f: fn(&dartscore_core::Point) -> f64| {
            written.iter().map(f).fold(f64::INFINITY, f64::min)
        };
        let max = |f: fn(&dartscore_core::Point) -> f64| {
            written.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
        };
        let (min_x, max_x) = (min(|p| p.x), max(|p| p.x));
        let (min_y, max_y) = (min(|p| p.y), max(|p| p.y));
        if !written.is_empty() && (max_x - min_x > w || max_y - min_y > h) {
            continue;
        }
        let shift_along = |lo: f64, hi: f64, extent: f64| {
            if lo < 0.0 {
                -lo
            } else if hi > extent {
                extent - hi
            } else {
                0.0
            }
        };
        let (dx, dy) = (shift_along(min_x, max_x, w), shift_along(min_y, max_y, h));
        if dx != 0.0 || dy != 0.0 {
            let shift = dartscore_core::Warp::translation(dx, dy);
            candidate.warp_total = candidate.warp_total.then(&shift);
            candidate.warp_cal = candidate.warp_cal.then(&shift);
            for p in candidate.cal_out.iter_mut().chain(candidate.darts_out.iter_mut()) {
                p.x += dx;
                p.y += dy;
            }
        }
        accepted = Some(candidate);
        break;
    }
    let result = accepted.ok_or_else(|| {
        anyhow!("augmented keypoints span more than the {}x{} frame in each of {DRAW_LIMIT} draws",
            record.width, record.height)
    })?;

    let mut out = record.clone();
    for (i, c) in result.cal_out.iter().enumerate() {
        // Corners the record never had stay absent; recovered geometry is
        // an internal aid, not new annotation data.
        if record.cal[i].is_some() {
            out.cal[i] = Some([c.x, c.y]);
        } else {
            out.cal[i] = None;
        }
    }
    out.darts = result.darts_out.iter().map(|p| [p.x, p.y]).collect();
    // Scores are re-derived from the augmented geometry so the record
    // stays self-consistent (board rotations permute sectors).
    if record.scores.is_some() {
        let mut moved = KeypointSet::default();
        moved.cal = result.cal_out.map(Some);
        moved.darts = result.darts_out.clone();
        moved.dart_confidences = vec![1.0; moved.darts.len()];
        let scored = score_darts_full(&moved, &pipeline.spec);
        out.scores = Some(scored.result.tokens);
    }

    if let (Some(images), Some(out_images)) = (&args.images, &args.out_images) {
        let src_path = images.join(&record.image);
        let src = image::open(&src_path)
            .with_context(|| format!("opening {}", src_path.display()))?
            .to_rgb8();
        let warped = dartscore_core::augment::warp_image(
            &src,
            &result.warp_total,
            src.width(),
            src.height(),
        )?;
        let dst_path = out_images.join(&record.image);
        if let Some(parent) = dst_path.parent() {
            fs::create_dir_all(parent)?;
        }
        warped
            .save(&dst_path)
            .with_context(|| format!("writing {}", dst_path.display()))?;
    }
    Ok(out)
}

// --------------------------------------------------------------- simulate

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let config = SceneConfig {
        image_size: args.image_size,
        rho: args.rho,
        ..SceneConfig::default()
    };
    config.validate()?;
    let noise = NoiseModel {
        sigma_px: args.sigma,
        p_miss: args.p_miss,
        fp_rate: args.fp_rate,
        cal_false_positives: args.cal_false_positives,
    };
    noise.validate()?;
    let spec = default_board_spec::<f64>();
    fs::create_dir_all(&args.out_detections)?;

    let mut records = Vec::with_capacity(args.scenes as usize);
    for scene_id in 0..args.scenes {
        let mut rng = substream_rng(args.seed, scene_id);
        let scene = sample_scene(&mut rng, &config, &spec, scene_id)?;
        let detections = corrupt(&scene, &noise, args.box_fraction, &mut rng);
        save_detections(
            &args.out_detections.join(format!("{}.json", detections.image_id)),
            &detections,
        )?;
        records.push(AnnotationRecord {
            image: detections.image_id.clone(),
            width: scene.image_size,
            height: scene.image_size,
            bbox: None,
            cal: scene.cal_image.map(|p| Some([p.x, p.y])),
            darts: scene.darts_image.iter().map(|p| [p.x, p.y]).collect(),
            scores: Some(scene.true_tokens.clone()),
        });
    }
    save_annotations(&args.out_labels, &records)?;
    println!(
        "wrote {} scenes to {} and {}",
        args.scenes,
        args.out_labels.display(),
        args.out_detections.display()
    );
    Ok(())
}

// ------------------------------------------------------------------ sweep

fn parse_list(name: &str, text: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| anyhow!("--{name} {s:?}: {e}")))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        bail!("--{name} lists no values");
    }
    Ok(values)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let sigmas = parse_list("sigma", &args.sigma)?;
    let p_misses = parse_list("p-miss", &args.p_miss)?;
    let fp_rates = parse_list("fp-rate", &args.fp_rate)?;
    let config = SceneConfig {
        image_size: args.image_size,
        rho: args.rho,
        ..SceneConfig::default()
    };
    let spec = default_board_spec::<f64>();
    let rows = run_sweep(
        &sigmas,
        &p_misses,
        &fp_rates,
        args.scenes,
        args.seed,
        &config,
        &spec,
        args.box_fraction,
    )?;
    save_sweep_csv(&args.out, &rows)?;
    if let Some(plot) = &args.plot {
        // Chart along the first parameter that actually varies.
        let axis = if sigmas.len() > 1 {
            SweepAxis::SigmaPx
        } else if p_misses.len() > 1 {
            SweepAxis::PMiss
        } else {
            SweepAxis::FpRate
        };
        write_atomic(plot, render_sweep_chart(&rows, axis).as_bytes())?;
    }
    for row in &rows {
        println!(
            "sigma {} p_miss {} fp_rate {}: pcs {}",
            row.sigma_px, row.p_miss, row.fp_rate, row.pcs
        );
    }
    Ok(())
}

// ---------------------------------------------------------- export-labels

/// Swaps path separators out of an image id so it can name a flat file.
fn file_stem_for(image: &str) -> String {
    let flat = image.replace(['/', '\\'], "_");
    match flat.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() && ext.chars().all(char::is_alphanumeric) => {
            stem.to_string()
        }
        _ => flat,
    }
}

fn cmd_export_labels(args: ExportLabelsArgs) -> Result<()> {
    let records = load_labels(&args.labels, args.lenient)?;
    fs::create_dir_all(&args.out_dir)?;
    for record in &records {
        // Rescale from the record's pixel frame to the detector input.
        let sx = f64::from(args.input_size) / f64::from(record.width);
        let sy = f64::from(args.input_size) / f64::from(record.height);
        let mut points = Vec::new();
        for (i, c) in record.cal.iter().enumerate() {
            if let Some([x, y]) = c {
                points.push((
                    dartscore_core::Point::new(x * sx, y * sy),
                    i as u8,
                ));
            }
        }
        for [x, y] in &record.darts {
            points.push((dartscore_core::Point::new(x * sx, y * sy), 4));
        }
        let boxes = keypoints_to_boxes(&points, args.box_fraction, args.input_size);
        let text = export_label_lines(&boxes, args.input_size);
        let path = args.out_dir.join(format!("{}.txt", file_stem_for(&record.image)));
        write_atomic(&path, text.as_bytes())?;
    }
    Ok(())
}

// ----------------------------------------------------------------- render

fn cmd_render(args: RenderArgs) -> Result<()> {
    let pipeline = args.pipeline.resolve()?;
    fs::create_dir_all(&args.out_dir)?;

    // Either source reduces to (image id, size, keypoints) triples.
    let mut inputs: Vec<(String, u32, u32, KeypointSet<f64>)> = Vec::new();
    if let Some(labels) = &args.input.labels {
        for record in load_labels(labels, args.lenient)? {
            let k = record.to_keypoints();
            let k = complete_calibration(&k).unwrap_or(k);
            inputs.push((record.image.clone(), record.width, record.height, k));
        }
    } else if let Some(detections) = &args.input.detections {
        for d in load_detection_inputs(detections, args.lenient)? {
            let k = resolve_for_scoring(&d, &pipeline);
            inputs.push((d.image_id.clone(), d.input_size, d.input_size, k));
        }
    }

    for (image, width, height, keypoints) in &inputs {
        let scored = score_darts_full(keypoints, &pipeline.spec);
        let svg = render_overlay(
            &OverlayScene {
                image_id: image,
                width: *width,
                height: *height,
                keypoints,
                scored: &scored,
            },
            &pipeline.spec,
        );
        let path = args.out_dir.join(format!("{}.svg", file_stem_for(image)));
        write_atomic(&path, svg.as_bytes())?;
    }
    println!("rendered {} image(s) to {}", inputs.len(), args.out_dir.display());
    Ok(())
}
