//! End-to-end integration: scene synthesis through detection resolution,
//! scoring, evaluation, and the file formats, exercised together.

use dartscore_core::board::default_board_spec;
use dartscore_core::detection::{nms, resolve_keypoints};
use dartscore_core::eval::{evaluate_sample, EvalReport, SampleEval};
use dartscore_core::io::svg::{render_overlay, OverlayScene};
use dartscore_core::io::{
    load_annotations, load_detections, save_annotations, save_detections, AnnotationRecord,
};
use dartscore_core::rng::substream_rng;
use dartscore_core::scoring::score_darts_full;
use dartscore_core::sim::{corrupt, run_sweep, sample_scene, NoiseModel, SceneConfig};

/// The full noiseless loop — synthesize, box, suppress, resolve, score,
/// evaluate — recovers every ground-truth total and classifies every
/// sample as correct.
#[test]
fn noiseless_loop_is_exact_through_evaluation() {
    let spec = default_board_spec::<f64>();
    let config = SceneConfig::default();
    let noise = NoiseModel::noiseless();
    let mut samples: Vec<SampleEval> = Vec::new();
    let mut distances: Vec<f64> = Vec::new();

    for scene_id in 0..150 {
        let mut rng = substream_rng(41, scene_id);
        let scene = sample_scene(&mut rng, &config, &spec, scene_id).unwrap();
        let detections = corrupt(&scene, &noise, 0.025, &mut rng);
        let survivors = nms(&detections.boxes, 0.3, 0.25);
        assert_eq!(survivors.len(), detections.boxes.len(), "noiseless NMS must keep all");

        let pred = resolve_keypoints(&detections, 3);
        let mut label = pred.clone();
        label.cal = scene.cal_image.map(Some);
        label.darts = scene.darts_image.clone();
        label.dart_confidences = vec![1.0; label.darts.len()];

        let (sample, d) = evaluate_sample(
            &detections.image_id,
            &pred,
            &label,
            Some(&scene.true_tokens),
            &spec,
            0.05,
        );
        assert!(sample.correct, "scene {scene_id}: {sample:?}");
        assert_eq!(sample.predicted_total, scene.true_total());
        samples.push(sample);
        distances.extend(d);
    }

    let report = EvalReport::from_samples(&samples, distances).unwrap();
    assert_eq!(report.pcs, 100.0);
    assert_eq!(report.error_histogram.total(), 0);
    // Matched distances are all zero in the noiseless loop.
    assert_eq!(report.dart_localization_stats.mean_px, Some(0.0));
}

/// A noisy run produces a coherent report: PCS in range, the histogram
/// accounting exactly for the incorrect samples, localization stats
/// present.
#[test]
fn noisy_loop_produces_coherent_report() {
    let spec = default_board_spec::<f64>();
    let config = SceneConfig::default();
    let noise = NoiseModel {
        sigma_px: 3.0,
        p_miss: 0.1,
        fp_rate: 0.5,
        cal_false_positives: false,
    };
    let mut samples = Vec::new();
    let mut distances = Vec::new();
    for scene_id in 0..120 {
        let mut rng = substream_rng(97, scene_id);
        let scene = sample_scene(&mut rng, &config, &spec, scene_id).unwrap();
        let detections = corrupt(&scene, &noise, 0.025, &mut rng);
        let pred = resolve_keypoints(&detections, 3);
        let mut label = dartscore_core::detection::KeypointSet::default();
        label.cal = scene.cal_image.map(Some);
        label.darts = scene.darts_image.clone();
        label.dart_confidences = vec![1.0; label.darts.len()];
        let (sample, d) =
            evaluate_sample(&detections.image_id, &pred, &label, Some(&scene.true_tokens), &spec, 0.05);
        samples.push(sample);
        distances.extend(d);
    }
    let report = EvalReport::from_samples(&samples, distances).unwrap();
    assert!(report.pcs > 0.0 && report.pcs < 100.0, "pcs {}", report.pcs);
    let incorrect = samples.iter().filter(|s| !s.correct).count() as u64;
    assert_eq!(report.error_histogram.total(), incorrect);
    assert!(report.dart_localization_stats.n_matched > 0);
    assert!(report.dart_localization_stats.mean_px.unwrap() > 0.0);
}

/// Sweep rows are a pure function of (seed, config): the degree of
/// parallelism must not leak into the output.
#[test]
fn sweep_rows_are_identical_across_thread_counts() {
    let spec = default_board_spec::<f64>();
    let config = SceneConfig::default();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                run_sweep(&[0.0, 2.0], &[0.0, 0.2], &[0.5], 40, 7, &config, &spec, 0.025).unwrap()
            })
    };
    let serial = run(1);
    let parallel = run(8);
    assert_eq!(serial, parallel);
}

/// Round trip through the on-disk formats, then score and render what
/// came back: the file layer must not perturb the numbers.
#[test]
fn scores_survive_the_file_formats() {
    let spec = default_board_spec::<f64>();
    let config = SceneConfig::default();
    let dir = tempfile::tempdir().unwrap();

    let mut rng = substream_rng(5, 0);
    let scene = sample_scene(&mut rng, &config, &spec, 0).unwrap();
    let detections = corrupt(&scene, &NoiseModel::noiseless(), 0.025, &mut rng);

    let det_path = dir.path().join("scene.json");
    save_detections(&det_path, &detections).unwrap();
    let loaded = load_detections(&det_path).unwrap();
    assert_eq!(loaded, detections);

    let record = AnnotationRecord {
        image: "scene_000000".into(),
        width: scene.image_size,
        height: scene.image_size,
        bbox: None,
        cal: scene.cal_image.map(|p| Some([p.x, p.y])),
        darts: scene.darts_image.iter().map(|p| [p.x, p.y]).collect(),
        scores: Some(scene.true_tokens.clone()),
    };
    record.validate().unwrap();
    let ann_path = dir.path().join("labels.jsonl");
    save_annotations(&ann_path, &[record.clone()]).unwrap();
    let loaded = load_annotations(&ann_path).unwrap();
    assert_eq!(loaded, vec![record]);

    let pred = resolve_keypoints(&detections, 3);
    let scored = score_darts_full(&pred, &spec);
    assert_eq!(scored.result.total, scene.true_total());

    let label_kp = loaded[0].to_keypoints();
    let label_scored = score_darts_full(&label_kp, &spec);
    assert_eq!(label_scored.result.tokens, scene.true_tokens);

    let svg = render_overlay(
        &OverlayScene {
            image_id: "scene_000000",
            width: scene.image_size,
            height: scene.image_size,
            keypoints: &pred,
            scored: &scored,
        },
        &spec,
    );
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains(&format!("total {}", scene.true_total())));
}
