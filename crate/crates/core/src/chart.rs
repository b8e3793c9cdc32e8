//! Deterministic SVG line charts for the run logs.
//!
//! Hand-rolled SVG with fixed float formatting so identical runs produce
//! byte-identical files (golden-testable). Attack intervals render as red
//! dashed vertical bounds; active drop windows render as shaded bands.

use crate::artifacts::RunArtifacts;
use crate::error::RunError;
use crate::ids::Label;
use crate::mitigation::MitigationEventKind;
use std::fmt::Write as _;
use std::path::Path;

pub const QUEUE_SVG: &str = "queue.svg";
pub const RATE_SVG: &str = "rate.svg";
pub const DELAY_SVG: &str = "delay.svg";
pub const DECISIONS_SVG: &str = "decisions.svg";

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 42.0;

/// Linear x map from data seconds to pixel coordinates; shared with the
/// SVG cross-check tests.
pub fn x_to_px(x: f64, x_min: f64, x_max: f64) -> f64 {
    let span = (x_max - x_min).max(1e-9);
    MARGIN_LEFT + (x - x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
}

fn y_to_px(y: f64, y_max: f64) -> f64 {
    let span = y_max.max(1e-9);
    HEIGHT - MARGIN_BOTTOM - y / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

struct ChartSpec<'a> {
    title: &'a str,
    y_label: &'a str,
    points: Vec<(f64, f64)>,
    x_min: f64,
    x_max: f64,
    /// Red dashed vertical bounds (attack interval edges), seconds.
    vlines: Vec<f64>,
    /// Shaded bands (drop windows), seconds.
    bands: Vec<(f64, f64)>,
}

fn render_line_chart(spec: &ChartSpec) -> String {
    let y_max = spec
        .points
        .iter()
        .map(|&(_, y)| y)
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.05;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        fmt(WIDTH / 2.0),
        spec.title
    );

    // Drop-window bands under everything else.
    for &(start, end) in &spec.bands {
        let x0 = x_to_px(start.max(spec.x_min), spec.x_min, spec.x_max);
        let x1 = x_to_px(end.min(spec.x_max), spec.x_min, spec.x_max);
        let _ = writeln!(
            svg,
            "<rect class=\"drop-window\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#f4b183\" opacity=\"0.35\"/>",
            fmt(x0),
            fmt(MARGIN_TOP),
            fmt((x1 - x0).max(0.0)),
            fmt(HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
        );
    }

    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt(MARGIN_LEFT),
        fmt(HEIGHT - MARGIN_BOTTOM),
        fmt(WIDTH - MARGIN_RIGHT),
        fmt(HEIGHT - MARGIN_BOTTOM)
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt(MARGIN_LEFT),
        fmt(MARGIN_TOP),
        fmt(MARGIN_LEFT),
        fmt(HEIGHT - MARGIN_BOTTOM)
    );

    // Ticks: five per axis, plain evenly spaced values.
    for k in 0..=4 {
        let xv = spec.x_min + (spec.x_max - spec.x_min) * k as f64 / 4.0;
        let xp = x_to_px(xv, spec.x_min, spec.x_max);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt(xp),
            fmt(HEIGHT - MARGIN_BOTTOM),
            fmt(xp),
            fmt(HEIGHT - MARGIN_BOTTOM + 5.0)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            fmt(xp),
            fmt(HEIGHT - MARGIN_BOTTOM + 18.0),
            fmt(xv)
        );
        let yv = y_max * k as f64 / 4.0;
        let yp = y_to_px(yv, y_max);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt(MARGIN_LEFT - 5.0),
            fmt(yp),
            fmt(MARGIN_LEFT),
            fmt(yp)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            fmt(MARGIN_LEFT - 8.0),
            fmt(yp + 4.0),
            fmt(yv)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">time (s)</text>",
        fmt((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0),
        fmt(HEIGHT - 6.0)
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        fmt(HEIGHT / 2.0),
        fmt(HEIGHT / 2.0),
        spec.y_label
    );

    // Attack bounds as red dashed verticals.
    for &x in &spec.vlines {
        if x < spec.x_min || x > spec.x_max {
            continue;
        }
        let xp = x_to_px(x, spec.x_min, spec.x_max);
        let _ = writeln!(
            svg,
            "<line class=\"attack-bound\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#cc2222\" stroke-dasharray=\"6,4\"/>",
            fmt(xp),
            fmt(MARGIN_TOP),
            fmt(xp),
            fmt(HEIGHT - MARGIN_BOTTOM)
        );
    }

    // The data polyline.
    if !spec.points.is_empty() {
        let mut path = String::new();
        for &(x, y) in &spec.points {
            let _ = write!(
                path,
                "{},{} ",
                fmt(x_to_px(x, spec.x_min, spec.x_max)),
                fmt(y_to_px(y.min(y_max), y_max))
            );
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.2\"/>",
            path.trim_end()
        );
    }

    svg.push_str("</svg>\n");
    svg
}

/// Decision raster: one tick per batch at y levels for normal/attack.
fn render_decisions(artifacts: &RunArtifacts, x_min: f64, x_max: f64) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">Batch decisions</text>",
        fmt(WIDTH / 2.0)
    );
    let y_attack = MARGIN_TOP + 60.0;
    let y_normal = HEIGHT - MARGIN_BOTTOM - 60.0;
    for (label, y) in [("Attack", y_attack), ("Normal", y_normal)] {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            fmt(MARGIN_LEFT - 8.0),
            fmt(y + 4.0),
            label
        );
    }
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt(MARGIN_LEFT),
        fmt(HEIGHT - MARGIN_BOTTOM),
        fmt(WIDTH - MARGIN_RIGHT),
        fmt(HEIGHT - MARGIN_BOTTOM)
    );
    for k in 0..=4 {
        let xv = x_min + (x_max - x_min) * k as f64 / 4.0;
        let xp = x_to_px(xv, x_min, x_max);
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            fmt(xp),
            fmt(HEIGHT - MARGIN_BOTTOM + 18.0),
            fmt(xv)
        );
    }
    for iv in &artifacts.stats.attack_intervals_s {
        for &x in iv {
            if x < x_min || x > x_max {
                continue;
            }
            let xp = x_to_px(x, x_min, x_max);
            let _ = writeln!(
                svg,
                "<line class=\"attack-bound\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#cc2222\" stroke-dasharray=\"6,4\"/>",
                fmt(xp),
                fmt(MARGIN_TOP),
                fmt(xp),
                fmt(HEIGHT - MARGIN_BOTTOM)
            );
        }
    }
    for d in &artifacts.decisions {
        let (y, color) = match d.label {
            Label::Attack => (y_attack, "#cc2222"),
            Label::Normal => (y_normal, "#2e7d32"),
        };
        let xp = x_to_px(d.decide_time_s, x_min, x_max);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"1.5\"/>",
            fmt(xp),
            fmt(y - 8.0),
            fmt(xp),
            fmt(y + 8.0),
            color
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Pair activate/deadline events into shaded drop windows; a window still
/// open at log end extends to `x_max`.
pub fn drop_windows(artifacts: &RunArtifacts, x_max: f64) -> Vec<(f64, f64)> {
    let mut bands = Vec::new();
    let mut open: Option<f64> = None;
    for e in &artifacts.events {
        match e.event {
            MitigationEventKind::Activate => open = Some(e.event_time_s),
            MitigationEventKind::Deadline => {
                if let Some(start) = open.take() {
                    bands.push((start, e.event_time_s));
                }
            }
        }
    }
    if let Some(start) = open {
        bands.push((start, x_max));
    }
    bands
}

/// Render queue/rate/delay/decision charts into `dir`.
pub fn render_charts(artifacts: &RunArtifacts, dir: &Path) -> Result<(), RunError> {
    let x_min = 0.0;
    let x_max = artifacts
        .timeline
        .last()
        .map(|r| r.time_s)
        .unwrap_or(1.0)
        .max(1e-9);
    let vlines: Vec<f64> = artifacts
        .stats
        .attack_intervals_s
        .iter()
        .flat_map(|iv| iv.iter().copied())
        .collect();
    let bands = drop_windows(artifacts, x_max);

    let charts = [
        (
            QUEUE_SVG,
            "Queue length in front of the detector",
            "packets",
            artifacts
                .timeline
                .iter()
                .map(|r| (r.time_s, r.queue_len as f64))
                .collect::<Vec<_>>(),
        ),
        (
            RATE_SVG,
            "Packet processing rate",
            "packets / s",
            artifacts
                .timeline
                .iter()
                .map(|r| (r.time_s, r.proc_rate_pps))
                .collect(),
        ),
        (
            DELAY_SVG,
            "Per-packet queueing delay",
            "ms",
            artifacts
                .timeline
                .iter()
                .map(|r| (r.time_s, r.delay_ms))
                .collect(),
        ),
    ];
    for (name, title, y_label, points) in charts {
        let spec = ChartSpec {
            title,
            y_label,
            points,
            x_min,
            x_max,
            vlines: vlines.clone(),
            bands: bands.clone(),
        };
        std::fs::write(dir.join(name), render_line_chart(&spec))?;
    }
    std::fs::write(
        dir.join(DECISIONS_SVG),
        render_decisions(artifacts, x_min, x_max),
    )?;
    Ok(())
}
