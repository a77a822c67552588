//! Shared helpers for the CLI test suites.

#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use dartscore_core::board::default_board_spec;
use dartscore_core::geometry::{similarity, Homography, PlanarPoint};
use dartscore_core::io::AnnotationRecord;

pub type P = PlanarPoint<f64>;

/// Runs the built `dartscore` binary with the given arguments.
pub fn dartscore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dartscore"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs the binary and asserts success, returning stdout.
pub fn dartscore_ok(args: &[&str]) -> String {
    let out = dartscore(args);
    assert!(
        out.status.success(),
        "dartscore {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 stdout")
}

/// Minimal XML well-formedness check: balanced tags, quoted attributes,
/// escaped text. Catches the mistakes hand-assembled markup makes.
pub fn assert_well_formed_xml(xml: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = xml;
    while let Some(lt) = rest.find('<') {
        let text = &rest[..lt];
        assert!(
            !text.contains('&')
                || text.split('&').skip(1).all(|t| {
                    t.starts_with("amp;")
                        || t.starts_with("lt;")
                        || t.starts_with("gt;")
                        || t.starts_with("quot;")
                }),
            "unescaped & in text: {text:?}"
        );
        let gt = rest[lt..].find('>').expect("unclosed tag") + lt;
        let tag = &rest[lt + 1..gt];
        assert!(!tag.contains('<'), "nested < in tag: {tag:?}");
        if let Some(name) = tag.strip_prefix('/') {
            let open = stack.pop().unwrap_or_else(|| panic!("unmatched </{name}>"));
            assert_eq!(open, name, "mismatched close tag");
        } else if !tag.ends_with('/') && !tag.starts_with('?') && !tag.starts_with('!') {
            let name: String = tag.chars().take_while(|c| !c.is_whitespace()).collect();
            assert_eq!(tag.matches('"').count() % 2, 0, "unbalanced quotes: {tag:?}");
            stack.push(name);
        }
        rest = &rest[gt + 1..];
    }
    assert!(stack.is_empty(), "unclosed tags: {stack:?}");
}

/// Face-on camera: board center at the image center, outer edge at
/// `radius_px`.
pub fn face_on_camera(image_size: u32, radius_px: f64) -> Homography<f64> {
    let c = f64::from(image_size) / 2.0;
    similarity(0.0, false, false, P::new(c, c), radius_px, P::new(0.0, 0.0))
}

/// An annotation record for a face-on board with the given board-plane
/// dart positions, scores left unset.
pub fn face_on_record(
    image: &str,
    image_size: u32,
    radius_px: f64,
    darts_board: &[P],
) -> AnnotationRecord {
    let cam = face_on_camera(image_size, radius_px);
    let spec = default_board_spec::<f64>();
    AnnotationRecord {
        image: image.to_string(),
        width: image_size,
        height: image_size,
        bbox: None,
        cal: spec.cal_point_targets.map(|t| {
            let p = cam.apply(t).unwrap();
            Some([p.x, p.y])
        }),
        darts: darts_board
            .iter()
            .map(|d| {
                let p = cam.apply(*d).unwrap();
                [p.x, p.y]
            })
            .collect(),
        scores: None,
    }
}

/// Writes annotation records as JSON Lines.
pub fn write_jsonl(path: &Path, records: &[AnnotationRecord]) {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).unwrap());
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}
