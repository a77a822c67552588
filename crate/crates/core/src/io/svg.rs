//! Hand-rolled SVG output: per-image board overlays and sweep charts.
//!
//! Overlays project the board skeleton (ring edges and sector wires)
//! through the fitted homography onto the image plane, then mark
//! calibration points, darts, and scores. Sector wires are straight lines
//! on the board and homographies preserve straightness, so two endpoints
//! suffice; ring edges map to conics and are sampled as polylines.

use std::fmt::Write as _;

use crate::board::{point_at_cw_angle, BoardSpec, ScoreToken};
use crate::detection::KeypointSet;
use crate::geometry::PlanarPoint;
use crate::scoring::{BoardCalibration, ScoredKeypoints};
use crate::sim::SweepRow;

/// Sample count per ring edge; plenty for sub-pixel fidelity at typical
/// image sizes.
const RING_SAMPLES: u32 = 144;

/// Calibration-class marker colors (top, right, bottom, left).
const CAL_COLORS: [&str; 4] = ["#e41a1c", "#377eb8", "#4daf4a", "#984ea3"];

const DART_COLOR: &str = "#ff7f00";
const SKELETON_COLOR: &str = "#2a6fb0";

/// Everything needed to draw one image's overlay.
pub struct OverlayScene<'a> {
    pub image_id: &'a str,
    pub width: u32,
    pub height: u32,
    /// Resolved keypoints, including which calibration points were
    /// recovered rather than detected.
    pub keypoints: &'a KeypointSet<f64>,
    /// Scoring outcome for the same keypoints.
    pub scored: &'a ScoredKeypoints<f64>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Maps a normalized board point through the fitted calibration back to
/// the image plane. `None` past the horizon.
fn board_to_image(
    cal: &BoardCalibration<f64>,
    h_inv: &crate::geometry::Homography<f64>,
    p: PlanarPoint<f64>,
) -> Option<PlanarPoint<f64>> {
    let q = PlanarPoint::new(
        cal.center.x + cal.radius * p.x,
        cal.center.y + cal.radius * p.y,
    );
    h_inv.apply(q).ok()
}

/// Appends a sampled ring edge as one or more polyline paths, breaking
/// the path at samples that map past the horizon.
fn ring_path(
    out: &mut String,
    cal: &BoardCalibration<f64>,
    h_inv: &crate::geometry::Homography<f64>,
    radius: f64,
) {
    let mut d = String::new();
    let mut pen_down = false;
    let mut all_mapped = true;
    for i in 0..=RING_SAMPLES {
        let theta = 360.0 * f64::from(i) / f64::from(RING_SAMPLES);
        let unit = point_at_cw_angle(theta);
        let p = PlanarPoint::new(unit.x * radius, unit.y * radius);
        match board_to_image(cal, h_inv, p) {
            Some(q) => {
                let cmd = if pen_down { 'L' } else { 'M' };
                let _ = write!(d, "{cmd}{:.2} {:.2} ", q.x, q.y);
                pen_down = true;
            }
            None => {
                pen_down = false;
                all_mapped = false;
            }
        }
    }
    if d.is_empty() {
        return;
    }
    if all_mapped {
        d.push('Z');
    }
    let _ = writeln!(
        out,
        r#"  <path d="{}" fill="none" stroke="{SKELETON_COLOR}" stroke-width="1"/>"#,
        d.trim_end()
    );
}

/// Renders one image's overlay as a standalone SVG document.
pub fn render_overlay(scene: &OverlayScene, spec: &BoardSpec<f64>) -> String {
    let (w, h) = (scene.width, scene.height);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, "  <title>{}</title>", esc(scene.image_id));
    let _ = writeln!(out, r##"  <rect width="{w}" height="{h}" fill="#fafafa"/>"##);

    if let Some(cal) = &scene.scored.calibration {
        if let Ok(h_inv) = cal.h.invert() {
            for r in [
                spec.r_double_bull,
                spec.r_bull,
                spec.r_treble_inner,
                spec.r_treble_outer,
                spec.r_double_inner,
                spec.r_double_outer,
            ] {
                ring_path(&mut out, cal, &h_inv, r);
            }
            // Sector wires: straight segments from the bull edge to the
            // outer double edge at each wedge boundary.
            for k in 0..20 {
                let angle = 9.0 + 18.0 * f64::from(k);
                let unit = point_at_cw_angle(angle);
                let inner = PlanarPoint::new(unit.x * spec.r_bull, unit.y * spec.r_bull);
                let outer = unit;
                if let (Some(a), Some(b)) = (
                    board_to_image(cal, &h_inv, inner),
                    board_to_image(cal, &h_inv, outer),
                ) {
                    let _ = writeln!(
                        out,
                        r#"  <line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{SKELETON_COLOR}" stroke-width="0.8" opacity="0.6"/>"#,
                        a.x, a.y, b.x, b.y
                    );
                }
            }
        }
    }

    // Calibration markers: detected points as filled circles, recovered
    // ones as open squares so the provenance is visible at a glance.
    for (i, p) in scene.keypoints.cal.iter().enumerate() {
        let Some(p) = p else { continue };
        let color = CAL_COLORS[i];
        if scene.keypoints.cal_recovered[i] {
            let _ = writeln!(
                out,
                r#"  <rect x="{:.2}" y="{:.2}" width="12" height="12" fill="none" stroke="{color}" stroke-width="2" stroke-dasharray="3 2"/>"#,
                p.x - 6.0,
                p.y - 6.0
            );
        } else {
            let _ = writeln!(
                out,
                r#"  <circle cx="{:.2}" cy="{:.2}" r="5" fill="{color}"/>"#,
                p.x, p.y
            );
        }
    }

    // Darts: crosshairs with their score tokens alongside.
    for (i, p) in scene.keypoints.darts.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"  <path d="M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}" stroke="{DART_COLOR}" stroke-width="2"/>"#,
            p.x - 7.0,
            p.y,
            p.x + 7.0,
            p.y,
            p.x,
            p.y - 7.0,
            p.x,
            p.y + 7.0
        );
        let token = scene
            .scored
            .result
            .tokens
            .get(i)
            .map(ScoreToken::to_string)
            .unwrap_or_default();
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" fill="{DART_COLOR}">{}</text>"#,
            p.x + 10.0,
            p.y - 10.0,
            esc(&token)
        );
    }

    let headline = if scene.scored.result.calibration_failed {
        "calibration failed — total 0".to_string()
    } else {
        format!("total {}", scene.scored.result.total)
    };
    let _ = writeln!(
        out,
        r##"  <text x="10" y="22" font-family="sans-serif" font-size="16" fill="#222">{} — {}</text>"##,
        esc(scene.image_id),
        headline
    );
    out.push_str("</svg>\n");
    out
}

/// Which sweep parameter runs along the chart's x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    SigmaPx,
    PMiss,
    FpRate,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::SigmaPx => "sigma_px",
            SweepAxis::PMiss => "p_miss",
            SweepAxis::FpRate => "fp_rate",
        }
    }

    fn value(self, r: &SweepRow) -> f64 {
        match self {
            SweepAxis::SigmaPx => r.sigma_px,
            SweepAxis::PMiss => r.p_miss,
            SweepAxis::FpRate => r.fp_rate,
        }
    }

    /// The two parameters held fixed per series.
    fn held(self, r: &SweepRow) -> (f64, f64) {
        match self {
            SweepAxis::SigmaPx => (r.p_miss, r.fp_rate),
            SweepAxis::PMiss => (r.sigma_px, r.fp_rate),
            SweepAxis::FpRate => (r.sigma_px, r.p_miss),
        }
    }
}

const SERIES_COLORS: [&str; 6] =
    ["#1b6ca8", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

/// Renders sweep rows as a PCS-vs-parameter line chart. Rows sharing the
/// two non-swept parameters form one series; multiple series get a
/// legend.
pub fn render_sweep_chart(rows: &[SweepRow], axis: SweepAxis) -> String {
    const W: f64 = 720.0;
    const H: f64 = 480.0;
    const ML: f64 = 64.0;
    const MR: f64 = 24.0;
    const MT: f64 = 36.0;
    const MB: f64 = 56.0;
    let plot_w = W - ML - MR;
    let plot_h = H - MT - MB;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r##"  <rect width="{W}" height="{H}" fill="#ffffff"/>"##);

    if rows.is_empty() {
        let _ = writeln!(
            out,
            r##"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="16" fill="#666">no sweep rows</text>"##,
            W / 2.0 - 50.0,
            H / 2.0
        );
        out.push_str("</svg>\n");
        return out;
    }

    let xs: Vec<f64> = rows.iter().map(|r| axis.value(r)).collect();
    let (x_min, x_max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let sx = |v: f64| ML + (v - x_min) / x_span * plot_w;
    let sy = |pcs: f64| MT + (100.0 - pcs) / 100.0 * plot_h;

    // Axes and PCS gridlines.
    let _ = writeln!(
        out,
        r##"  <line x1="{ML}" y1="{MT}" x2="{ML}" y2="{:.1}" stroke="#333" stroke-width="1"/>"##,
        MT + plot_h
    );
    let _ = writeln!(
        out,
        r##"  <line x1="{ML}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#333" stroke-width="1"/>"##,
        MT + plot_h,
        ML + plot_w,
        MT + plot_h
    );
    for tick in [0.0, 20.0, 40.0, 60.0, 80.0, 100.0] {
        let y = sy(tick);
        let _ = writeln!(
            out,
            r##"  <line x1="{ML}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd" stroke-width="0.5"/>"##,
            ML + plot_w
        );
        let _ = writeln!(
            out,
            r##"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" fill="#333" text-anchor="end">{tick}</text>"##,
            ML - 8.0,
            y + 4.0
        );
    }
    // X ticks at the distinct swept values.
    let mut x_ticks: Vec<f64> = xs.clone();
    x_ticks.sort_by(f64::total_cmp);
    x_ticks.dedup();
    for v in &x_ticks {
        let x = sx(*v);
        let _ = writeln!(
            out,
            r##"  <line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333" stroke-width="1"/>"##,
            MT + plot_h,
            MT + plot_h + 5.0
        );
        let _ = writeln!(
            out,
            r##"  <text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="12" fill="#333" text-anchor="middle">{v}</text>"##,
            MT + plot_h + 20.0
        );
    }
    let _ = writeln!(
        out,
        r##"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="14" fill="#333" text-anchor="middle">{}</text>"##,
        ML + plot_w / 2.0,
        H - 12.0,
        axis.label()
    );
    let _ = writeln!(
        out,
        r##"  <text x="18" y="{:.1}" font-family="sans-serif" font-size="14" fill="#333" text-anchor="middle" transform="rotate(-90 18 {:.1})">PCS</text>"##,
        MT + plot_h / 2.0,
        MT + plot_h / 2.0
    );

    // Group rows into series by the held-fixed parameters, preserving
    // first-seen order.
    let mut series: Vec<((f64, f64), Vec<&SweepRow>)> = Vec::new();
    for r in rows {
        let key = axis.held(r);
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => series.push((key, vec![r])),
        }
    }

    for (si, (key, group)) in series.iter().enumerate() {
        let color = SERIES_COLORS[si % SERIES_COLORS.len()];
        let mut pts: Vec<(f64, f64)> =
            group.iter().map(|r| (axis.value(r), r.pcs)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> =
            pts.iter().map(|(x, y)| format!("{:.1},{:.1}", sx(*x), sy(*y))).collect();
        if path.len() > 1 {
            let _ = writeln!(
                out,
                r#"  <polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
        }
        for (x, y) in &pts {
            let _ = writeln!(
                out,
                r#"  <circle cx="{:.1}" cy="{:.1}" r="3.5" fill="{color}"/>"#,
                sx(*x),
                sy(*y)
            );
        }
        if series.len() > 1 {
            let ly = MT + 16.0 * (si as f64) + 4.0;
            let _ = writeln!(
                out,
                r#"  <line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
                ML + plot_w - 150.0,
                ML + plot_w - 126.0
            );
            let (a, b) = key;
            let _ = writeln!(
                out,
                r##"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="#333">{a}, {b}</text>"##,
                ML + plot_w - 120.0,
                ly + 4.0
            );
        }
    }

    out.push_str("</svg>\n");
    out
}
