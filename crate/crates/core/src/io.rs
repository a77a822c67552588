//! File formats: annotations, detections, board specs, run configs,
//! reports, and label export.
//!
//! Readers validate every record against the type invariants and report
//! failures with file/line/field context; writers go through a
//! temp-file-plus-rename so a crash never leaves a half-written output.
//! Floats are serialized with the shortest round-tripping representation,
//! so write → read is exact.

pub mod svg;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::AugmentSpec;
use crate::board::{BoardSpec, ScoreToken};
use crate::detection::{DetectionSet, KeypointBox, KeypointSet};
use crate::eval::{EvalReport, SampleEval};
use crate::geometry::PlanarPoint;
use crate::sim::{NoiseModel, SweepRow};

/// IO and validation failures, carrying enough context to point at the
/// offending file, line, and field.
#[derive(Debug, Error)]
pub enum IoError {
    // The cause is part of the message, not the error chain (a field named
    // `source` would be chained implicitly and printed twice).
    #[error("{path}: {cause}")]
    Io { path: String, cause: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Record { path: String, line: usize, message: String },
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

impl IoError {
    fn io(path: &Path, cause: std::io::Error) -> Self {
        IoError::Io { path: path.display().to_string(), cause }
    }

    fn record(path: &Path, line: usize, message: impl Into<String>) -> Self {
        IoError::Record { path: path.display().to_string(), line, message: message.into() }
    }

    fn file(path: &Path, message: impl Into<String>) -> Self {
        IoError::File { path: path.display().to_string(), message: message.into() }
    }
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let tmp = path.with_extension(format!(
        "{}tmp-{}",
        path.extension().map(|e| format!("{}.", e.to_string_lossy())).unwrap_or_default(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| IoError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| IoError::io(&tmp, e))?;
    f.sync_all().map_err(|e| IoError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| IoError::io(path, e))?;
    Ok(())
}

/// Square dartboard crop within a source photo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropBox {
    pub x: f64,
    pub y: f64,
    pub side: f64,
}

/// One labeled image: keypoint annotations plus optional scores and crop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<CropBox>,
    /// Calibration keypoints by class 0..3; absent entries are occluded.
    pub cal: [Option<[f64; 2]>; 4],
    /// Dart keypoints, at most 3.
    pub darts: Vec<[f64; 2]>,
    /// Per-dart score tokens, parallel to `darts`, when annotated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<ScoreToken>>,
}

impl AnnotationRecord {
    /// Checks the record's invariants, naming the first offending field.
    pub fn validate(&self) -> Result<(), String> {
        if self.width == 0 || self.height == 0 {
            return Err(format!("width/height: {}x{} not positive", self.width, self.height));
        }
        let (w, h) = (f64::from(self.width), f64::from(self.height));
        if let Some(b) = &self.bbox {
            if b.side <= 0.0 || b.x < 0.0 || b.y < 0.0 || b.x + b.side > w || b.y + b.side > h {
                return Err(format!(
                    "bbox: ({}, {}, side {}) outside {}x{} image",
                    b.x, b.y, b.side, self.width, self.height
                ));
            }
        }
        let inside = |p: &[f64; 2]| p[0] >= 0.0 && p[0] <= w && p[1] >= 0.0 && p[1] <= h;
        for (i, c) in self.cal.iter().enumerate() {
            if let Some(p) = c {
                if !inside(p) {
                    return Err(format!("cal[{i}]: ({}, {}) outside image bounds", p[0], p[1]));
                }
            }
        }
        if self.darts.len() > 3 {
            return Err(format!("darts: {} entries, at most 3 allowed", self.darts.len()));
        }
        for (i, p) in self.darts.iter().enumerate() {
            if !inside(p) {
                return Err(format!("darts[{i}]: ({}, {}) outside image bounds", p[0], p[1]));
            }
        }
        if let Some(scores) = &self.scores {
            if scores.len() != self.darts.len() {
                return Err(format!(
                    "scores: {} entries for {} darts",
                    scores.len(),
                    self.darts.len()
                ));
            }
        }
        Ok(())
    }

    /// View as resolved keypoints (label side of an evaluation).
    pub fn to_keypoints(&self) -> KeypointSet<f64> {
        let mut k = KeypointSet::default();
        for (i, c) in self.cal.iter().enumerate() {
            k.cal[i] = c.map(|[x, y]| PlanarPoint::new(x, y));
        }
        k.darts = self.darts.iter().map(|&[x, y]| PlanarPoint::new(x, y)).collect();
        k.dart_confidences = vec![1.0; k.darts.len()];
        k
    }

    /// Applies the stored crop: keypoints shift into the crop square and
    /// rescale to `target_size`; the crop is consumed. Records without a
    /// bbox are returned unchanged. Keypoints outside the crop square end
    /// up out of bounds and fail validation — that loss is real, not
    /// silently clamped.
    pub fn apply_crop(&self, target_size: u32) -> AnnotationRecord {
        let Some(b) = self.bbox else {
            return self.clone();
        };
        let s = f64::from(target_size) / b.side;
        let map = |[x, y]: [f64; 2]| [(x - b.x) * s, (y - b.y) * s];
        AnnotationRecord {
            image: self.image.clone(),
            width: target_size,
            height: target_size,
            bbox: None,
            cal: self.cal.map(|c| c.map(map)),
            darts: self.darts.iter().map(|&p| map(p)).collect(),
            scores: self.scores.clone(),
        }
    }
}

/// Reads a JSON-Lines annotation file, validating every record.
pub fn load_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, IoError> {
    let (records, errors) = load_annotations_lenient(path)?;
    if let Some(e) = errors.into_iter().next() {
        return Err(e);
    }
    Ok(records)
}

/// Reads a JSON-Lines annotation file, collecting invalid records as
/// diagnostics instead of failing outright. IO failures still error.
pub fn load_annotations_lenient(
    path: &Path,
) -> Result<(Vec<AnnotationRecord>, Vec<IoError>), IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        match serde_json::from_str::<AnnotationRecord>(line) {
            Ok(r) => match r.validate() {
                Ok(()) => records.push(r),
                Err(msg) => errors.push(IoError::record(path, lineno, msg)),
            },
            Err(e) => errors.push(IoError::record(path, lineno, e.to_string())),
        }
    }
    Ok((records, errors))
}

/// Writes annotations as JSON Lines, atomically.
pub fn save_annotations(path: &Path, records: &[AnnotationRecord]) -> Result<(), IoError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("annotation serializes"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Checks a detection set's invariants, naming the offending box/field.
pub fn validate_detections(d: &DetectionSet<f64>) -> Result<(), String> {
    if d.input_size == 0 {
        return Err("input_size: must be positive".into());
    }
    let size = f64::from(d.input_size);
    for (i, b) in d.boxes.iter().enumerate() {
        if b.class_id > 4 {
            return Err(format!("boxes[{i}].class: {} not in 0..4", b.class_id));
        }
        if !(b.w > 0.0 && b.h > 0.0) {
            return Err(format!("boxes[{i}].w/h: {}x{} not positive", b.w, b.h));
        }
        if !(0.0..=1.0).contains(&b.confidence) {
            return Err(format!("boxes[{i}].conf: {} outside [0, 1]", b.confidence));
        }
        if !(0.0..=size).contains(&b.cx) || !(0.0..=size).contains(&b.cy) {
            return Err(format!(
                "boxes[{i}].cx/cy: ({}, {}) outside [0, {}]",
                b.cx, b.cy, d.input_size
            ));
        }
    }
    Ok(())
}

/// Reads one per-image detection JSON file.
pub fn load_detections(path: &Path) -> Result<DetectionSet<f64>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let d: DetectionSet<f64> =
        serde_json::from_str(&text).map_err(|e| IoError::file(path, e.to_string()))?;
    validate_detections(&d).map_err(|m| IoError::file(path, m))?;
    Ok(d)
}

/// Reads detections from a file, or every `*.json` in a directory in
/// filename order.
pub fn load_detections_path(path: &Path) -> Result<Vec<DetectionSet<f64>>, IoError> {
    if !path.is_dir() {
        return Ok(vec![load_detections(path)?]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| IoError::io(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    files.iter().map(|f| load_detections(f)).collect()
}

/// Writes one detection set as pretty JSON, atomically.
pub fn save_detections(path: &Path, d: &DetectionSet<f64>) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(d).expect("detections serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// On-disk board description: raw radii in millimeters plus layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardSpecFile {
    pub radii_mm: [f64; 6],
    pub sector_sequence: [u8; 20],
    pub cal_angles_deg: [f64; 4],
}

/// Reads and normalizes a board-spec file.
pub fn load_board_spec(path: &Path) -> Result<BoardSpec<f64>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let raw: BoardSpecFile =
        serde_json::from_str(&text).map_err(|e| IoError::file(path, e.to_string()))?;
    BoardSpec::from_radii_mm(raw.radii_mm, raw.sector_sequence, raw.cal_angles_deg)
        .map_err(|e| IoError::file(path, e.to_string()))
}

/// Pipeline configuration, loadable from a JSON file; every field has the
/// standard default so partial configs are fine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Path to a board-spec file; absent means the standard board.
    pub board_spec: Option<String>,
    pub input_size: u32,
    pub box_fraction: f64,
    pub iou_threshold: f64,
    pub conf_threshold: f64,
    pub max_darts: usize,
    pub augment: AugmentSpec<f64>,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            board_spec: None,
            input_size: 800,
            box_fraction: 0.025,
            iou_threshold: crate::detection::DEFAULT_IOU_THRESHOLD,
            conf_threshold: crate::detection::DEFAULT_CONF_THRESHOLD,
            max_darts: crate::detection::DEFAULT_MAX_DARTS,
            augment: AugmentSpec::default(),
            noise: NoiseModel::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.input_size == 0 {
            return Err("input_size: must be positive".into());
        }
        if !(0.0 < self.box_fraction && self.box_fraction <= 1.0) {
            return Err(format!("box_fraction: {} outside (0, 1]", self.box_fraction));
        }
        for (name, v) in [("iou_threshold", self.iou_threshold), ("conf_threshold", self.conf_threshold)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name}: {v} outside [0, 1]"));
            }
        }
        self.augment.validate().map_err(|e| format!("augment: {e}"))?;
        self.noise.validate().map_err(|e| format!("noise: {e}"))?;
        Ok(())
    }
}

/// Reads a run-config file.
pub fn load_run_config(path: &Path) -> Result<RunConfig, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| IoError::file(path, e.to_string()))?;
    config.validate().map_err(|m| IoError::file(path, m))?;
    Ok(config)
}

/// Formats keypoint boxes as detector-training label lines:
/// `class cx cy w h`, all geometry normalized to [0, 1] by `input_size`.
pub fn export_label_lines(boxes: &[KeypointBox<f64>], input_size: u32) -> String {
    let s = f64::from(input_size);
    let mut out = String::new();
    for b in boxes {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            b.class_id,
            b.cx / s,
            b.cy / s,
            b.w / s,
            b.h / s
        ));
    }
    out
}

/// Parses label lines written by [`export_label_lines`] back into boxes
/// (confidence 1.0).
pub fn parse_label_lines(text: &str, input_size: u32) -> Result<Vec<KeypointBox<f64>>, String> {
    let s = f64::from(input_size);
    let mut boxes = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(format!("line {}: expected 5 fields, got {}", idx + 1, fields.len()));
        }
        let class_id: u8 =
            fields[0].parse().map_err(|e| format!("line {}: class: {e}", idx + 1))?;
        let mut vals = [0.0f64; 4];
        for (v, f) in vals.iter_mut().zip(&fields[1..]) {
            *v = f.parse().map_err(|e| format!("line {}: {e}", idx + 1))?;
        }
        boxes.push(KeypointBox {
            class_id,
            cx: vals[0] * s,
            cy: vals[1] * s,
            w: vals[2] * s,
            h: vals[3] * s,
            confidence: 1.0,
        });
    }
    Ok(boxes)
}

/// Writes an evaluation report as pretty JSON, atomically.
pub fn save_eval_report(path: &Path, report: &EvalReport) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Writes the per-sample evaluation CSV, atomically.
pub fn save_sample_csv(path: &Path, samples: &[SampleEval]) -> Result<(), IoError> {
    let mut out = String::from("image,predicted_total,label_total,correct,error_class\n");
    for s in samples {
        let class = serde_json::to_value(s.error_class).expect("error class serializes");
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_field(&s.image_id),
            s.predicted_total,
            s.label_total,
            s.correct,
            class.as_str().expect("error class is a string")
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Renders sweep rows as CSV (the documented header; empty
/// mean_loc_err_px when nothing matched).
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("sigma_px,p_miss,fp_rate,n_scenes,pcs,mean_loc_err_px\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.sigma_px,
            r.p_miss,
            r.fp_rate,
            r.n_scenes,
            r.pcs,
            r.mean_loc_err_px.map(|v| v.to_string()).unwrap_or_default()
        ));
    }
    out
}

/// Writes the sweep CSV, atomically.
pub fn save_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), IoError> {
    write_atomic(path, sweep_csv(rows).as_bytes())
}

/// Quotes a CSV field only when it needs it.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ErrorClass;

    fn record() -> AnnotationRecord {
        AnnotationRecord {
            image: "img_0001.jpg".into(),
            width: 800,
            height: 800,
            bbox: None,
            cal: [
                Some([100.0, 100.0]),
                Some([700.0, 100.0]),
                Some([700.0, 700.0]),
                None,
            ],
            darts: vec![[400.0, 300.0], [420.5, 310.25]],
            scores: Some(vec![ScoreToken::Treble(20), ScoreToken::Single(5)]),
        }
    }

    #[test]
    fn annotation_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let records = vec![record(), AnnotationRecord { scores: None, ..record() }];
        save_annotations(&path, &records).unwrap();
        let back = load_annotations(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn annotation_validation_diagnostics() {
        let mut bad = record();
        bad.darts.push([10.0, 10.0]); // scores no longer parallel
        assert!(bad.validate().unwrap_err().contains("scores"));
        bad.darts.push([10.0, 20.0]);
        bad.scores = None;
        assert!(bad.validate().unwrap_err().contains("darts"));

        let mut oob = record();
        oob.darts[0] = [900.0, 100.0];
        assert!(oob.validate().unwrap_err().contains("darts[0]"));

        let mut badbox = record();
        badbox.bbox = Some(CropBox { x: 700.0, y: 0.0, side: 200.0 });
        assert!(badbox.validate().unwrap_err().contains("bbox"));
    }

    #[test]
    fn lenient_load_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let good = serde_json::to_string(&record()).unwrap();
        let mut oob = record();
        oob.darts[0] = [-5.0, 0.0];
        let bad = serde_json::to_string(&oob).unwrap();
        fs::write(&path, format!("{good}\nnot json\n{bad}\n{good}\n")).unwrap();
        let (records, errors) = load_annotations_lenient(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(errors.len(), 2);
        assert!(errors[0].to_string().contains(":2:"));
        assert!(errors[1].to_string().contains(":3:"));
        assert!(load_annotations(&path).is_err());
    }

    #[test]
    fn apply_crop_rescales_keypoints() {
        let mut r = record();
        r.bbox = Some(CropBox { x: 100.0, y: 100.0, side: 600.0 });
        let cropped = r.apply_crop(800);
        assert_eq!(cropped.width, 800);
        assert_eq!(cropped.bbox, None);
        // (400, 300) -> ((400-100)·800/600, (300-100)·800/600) = (400, 266.67)
        let d = cropped.darts[0];
        assert!((d[0] - 400.0).abs() < 1e-9);
        assert!((d[1] - 800.0 / 3.0).abs() < 1e-9);
        // cal[0] at (100, 100) maps to the crop origin.
        assert_eq!(cropped.cal[0], Some([0.0, 0.0]));
        cropped.validate().unwrap();
    }

    #[test]
    fn detection_file_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene_000001.json");
        let d = DetectionSet {
            image_id: "scene_000001".into(),
            input_size: 800,
            boxes: vec![KeypointBox {
                class_id: 4,
                cx: 400.0,
                cy: 300.0,
                w: 20.0,
                h: 20.0,
                confidence: 0.9,
            }],
        };
        save_detections(&path, &d).unwrap();
        assert_eq!(load_detections(&path).unwrap(), d);

        let mut bad = d.clone();
        bad.boxes[0].confidence = 1.5;
        save_detections(&path, &bad).unwrap();
        let err = load_detections(&path).unwrap_err().to_string();
        assert!(err.contains("boxes[0].conf"), "{err}");
    }

    #[test]
    fn detections_dir_loads_in_filename_order() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.json", "a.json", "c.txt"] {
            let d = DetectionSet::<f64> {
                image_id: name.into(),
                input_size: 800,
                boxes: vec![],
            };
            save_detections(&dir.path().join(name), &d).unwrap();
        }
        let all = load_detections_path(dir.path()).unwrap();
        let ids: Vec<&str> = all.iter().map(|d| d.image_id.as_str()).collect();
        assert_eq!(ids, vec!["a.json", "b.json"]);
    }

    #[test]
    fn board_spec_file_normalizes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("board.json");
        let file = BoardSpecFile {
            radii_mm: crate::board::DEFAULT_RADII_MM,
            sector_sequence: crate::board::DEFAULT_SECTOR_SEQUENCE,
            cal_angles_deg: crate::board::DEFAULT_CAL_ANGLES_DEG,
        };
        fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        let spec = load_board_spec(&path).unwrap();
        assert_eq!(spec, crate::board::default_board_spec::<f64>());

        let mut bad = file;
        bad.sector_sequence[0] = 21;
        fs::write(&path, serde_json::to_string(&bad).unwrap()).unwrap();
        assert!(load_board_spec(&path).is_err());
    }

    #[test]
    fn run_config_defaults_and_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        fs::write(&path, r#"{"seed": 7, "noise": {"sigma_px": 2.0, "p_miss": 0.0, "fp_rate": 0.0}}"#)
            .unwrap();
        let config = load_run_config(&path).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.noise.sigma_px, 2.0);
        assert_eq!(config.input_size, 800);
        assert_eq!(config.iou_threshold, 0.3);
        assert_eq!(config.conf_threshold, 0.25);
        assert_eq!(config.box_fraction, 0.025);

        fs::write(&path, r#"{"box_fraction": 0.0}"#).unwrap();
        assert!(load_run_config(&path).unwrap_err().to_string().contains("box_fraction"));
    }

    #[test]
    fn label_lines_format_and_round_trip() {
        let boxes = vec![KeypointBox::<f64> {
            class_id: 4,
            cx: 400.0,
            cy: 400.0,
            w: 20.0,
            h: 20.0,
            confidence: 1.0,
        }];
        let text = export_label_lines(&boxes, 800);
        assert_eq!(text, "4 0.5 0.5 0.025 0.025\n");
        let back = parse_label_lines(&text, 800).unwrap();
        assert_eq!(back, boxes);

        // Full-precision round trip on awkward values.
        let awkward = vec![KeypointBox::<f64> {
            class_id: 2,
            cx: 123.456789012345,
            cy: 0.1,
            w: 12.0,
            h: 12.0,
            confidence: 1.0,
        }];
        let back = parse_label_lines(&export_label_lines(&awkward, 480), 480).unwrap();
        assert!((back[0].cx - awkward[0].cx).abs() < 1e-9 * awkward[0].cx.abs());
        assert!((back[0].cy - awkward[0].cy).abs() < 1e-12);
    }

    #[test]
    fn sweep_csv_format() {
        let rows = vec![
            SweepRow {
                sigma_px: 0.0,
                p_miss: 0.0,
                fp_rate: 0.0,
                n_scenes: 100,
                pcs: 100.0,
                mean_loc_err_px: Some(0.0),
            },
            SweepRow {
                sigma_px: 2.5,
                p_miss: 0.1,
                fp_rate: 0.5,
                n_scenes: 100,
                pcs: 87.5,
                mean_loc_err_px: None,
            },
        ];
        let csv = sweep_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "sigma_px,p_miss,fp_rate,n_scenes,pcs,mean_loc_err_px");
        assert_eq!(lines[1], "0,0,0,100,100,0");
        assert_eq!(lines[2], "2.5,0.1,0.5,100,87.5,");
    }

    #[test]
    fn sample_csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        let samples = vec![SampleEval {
            image_id: "img,with,commas".into(),
            predicted_total: 41,
            label_total: 60,
            correct: false,
            error_class: ErrorClass::SectorMisclassified,
        }];
        save_sample_csv(&path, &samples).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "image,predicted_total,label_total,correct,error_class");
        assert_eq!(lines[1], "\"img,with,commas\",41,60,false,SECTOR_MISCLASSIFIED");
    }

    #[test]
    fn atomic_write_replaces_existing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        // No temp files left behind.
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
