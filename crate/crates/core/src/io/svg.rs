//! Line charts of error and speed traces as standalone SVG documents.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::{ErrorSeries, JointErrors};
use crate::error::{Error, Result};
use crate::skeleton::JointId;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub label: String,
    pub t_s: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotLabels {
    pub title: String,
    pub y_label: String,
}

/// Which traces of an [`ErrorSeries`] to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Position error per joint.
    Position,
    /// Per-axis position error per joint.
    Axes,
    /// Speed error per joint.
    SpeedError,
    /// Reference and test speed per joint, overlaid.
    Speed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSelection {
    pub kind: PlotKind,
    /// Empty selects every joint in the series.
    pub joints: Vec<JointId>,
}

impl PlotSelection {
    pub fn new(kind: PlotKind) -> Self {
        Self {
            kind,
            joints: Vec::new(),
        }
    }
}

/// Builds the traces and axis labels for `selection`.
pub fn select_traces(errors: &ErrorSeries, selection: &PlotSelection) -> (Vec<Trace>, PlotLabels) {
    let chosen: Vec<&JointErrors> = errors
        .joints
        .iter()
        .filter(|j| selection.joints.is_empty() || selection.joints.contains(&j.joint))
        .collect();
    let trace = |label: String, values: &[f64]| Trace {
        label,
        t_s: errors.t_s.clone(),
        values: values.to_vec(),
    };
    let mut traces = Vec::new();
    for j in chosen {
        match selection.kind {
            PlotKind::Position => traces.push(trace(j.joint.to_string(), &j.err_pos_m)),
            PlotKind::Axes => {
                traces.push(trace(format!("{} x", j.joint), &j.err_x_m));
                traces.push(trace(format!("{} y", j.joint), &j.err_y_m));
                traces.push(trace(format!("{} z", j.joint), &j.err_z_m));
            }
            PlotKind::SpeedError => traces.push(trace(j.joint.to_string(), &j.err_speed_mps)),
            PlotKind::Speed => {
                traces.push(trace(format!("{} ref", j.joint), &j.ref_speed_mps));
                traces.push(trace(format!("{} test", j.joint), &j.test_speed_mps));
            }
        }
    }
    let (title, y_label) = match selection.kind {
        PlotKind::Position => ("Position error", "position error (m)"),
        PlotKind::Axes => ("Position error by axis", "position error (m)"),
        PlotKind::SpeedError => ("Speed error", "speed error (m/s)"),
        PlotKind::Speed => ("Speed comparison", "speed (m/s)"),
    };
    (
        traces,
        PlotLabels {
            title: title.to_string(),
            y_label: y_label.to_string(),
        },
    )
}

/// Renders `traces` against time. Output depends only on the inputs.
pub fn render_svg(traces: &[Trace], labels: &PlotLabels) -> Result<String> {
    if traces.is_empty() || traces.iter().all(|t| t.values.is_empty()) {
        return Err(Error::EmptySeries);
    }
    let points = || {
        traces
            .iter()
            .flat_map(|tr| tr.t_s.iter().copied().zip(tr.values.iter().copied()))
            .filter(|(t, v)| t.is_finite() && v.is_finite())
    };
    let (mut t0, mut t1, mut v0, mut v1) = points().fold(
        (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY),
        |(a, b, c, d), (t, v)| (a.min(t), b.max(t), c.min(v), d.max(v)),
    );
    if !t0.is_finite() {
        return Err(Error::EmptySeries);
    }
    if t1 <= t0 {
        t1 = t0 + 1.0;
    }
    if v1 <= v0 {
        v1 = v0 + 1.0;
    }
    let pad = (v1 - v0) * 0.05;
    v1 += pad;
    if v0 < 0.0 {
        v0 -= pad;
    }
    if t0 == -0.0 {
        t0 = 0.0;
    }

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let sy = |v: f64| TOP + plot_h - (v - v0) / (v1 - v0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&labels.title)
    );

    // Grid and tick labels.
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let t = t0 + (t1 - t0) * f;
        let v = v0 + (v1 - v0) * f;
        let (x, y) = (sx(t), sy(v));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.2}</text>"#,
            TOP + plot_h + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&labels.y_label)
    );

    for (k, tr) in traces.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = String::new();
        for (t, v) in tr.t_s.iter().zip(&tr.values) {
            if t.is_finite() && v.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(*t), sy(*v));
            }
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.trim_end()
        );
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = LEFT + plot_w + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 22.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape(&tr.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Renders the selected traces of `errors` to `path`.
pub fn render_plot(
    errors: &ErrorSeries,
    selection: &PlotSelection,
    path: impl AsRef<Path>,
) -> Result<()> {
    if errors.is_empty() {
        return Err(Error::EmptySeries);
    }
    let (traces, labels) = select_traces(errors, selection);
    let svg = render_svg(&traces, &labels)?;
    let path = path.as_ref();
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
