//! Learning-curve plots as plain SVG text.
//!
//! Each run's returns are smoothed with a trailing episode mean and sampled on
//! a shared grid of cumulative steps. Per group the plot shows the mean over
//! runs as a line and the 25th to 75th percentile range as a shaded band.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::harness::{quantile, HarnessError, LearningCurve};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const GRID_POINTS: usize = 200;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

/// Curves drawn as one line and band.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotGroup {
    pub label: String,
    pub curves: Vec<LearningCurve>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub groups: Vec<PlotGroup>,
    pub window: usize,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub output: PathBuf,
}

/// CSV files for an input path: the file itself, or every `*.csv` in a directory sorted by name.
pub fn collect_csvs(path: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| HarnessError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(HarnessError::InvalidCurve(format!("{}: no CSV files", path.display())));
        }
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

/// Trailing mean of the last `window` returns at each episode.
pub fn smooth(curve: &LearningCurve, window: usize) -> Vec<(u64, f64)> {
    let window = window.max(1);
    let returns: Vec<f64> = curve.returns().collect();
    let mut sum = 0.0;
    curve
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            sum += returns[i];
            if i >= window {
                sum -= returns[i - window];
            }
            (r.steps, sum / (i + 1).min(window) as f64)
        })
        .collect()
}

/// Value of a smoothed curve at `step`: the last episode ending at or before it.
fn value_at(points: &[(u64, f64)], step: f64) -> Option<f64> {
    let idx = points.partition_point(|&(s, _)| (s as f64) <= step);
    (idx > 0).then(|| points[idx - 1].1)
}

struct Series {
    label: String,
    /// (step, mean, q25, q75)
    points: Vec<(f64, f64, f64, f64)>,
}

fn series(spec: &PlotSpec, max_step: f64) -> Vec<Series> {
    spec.groups
        .iter()
        .map(|g| {
            let smoothed: Vec<Vec<(u64, f64)>> = g.curves.iter().map(|c| smooth(c, spec.window)).collect();
            let points = (0..=GRID_POINTS)
                .filter_map(|i| {
                    let x = max_step * i as f64 / GRID_POINTS as f64;
                    let values: Vec<f64> = smoothed.iter().filter_map(|p| value_at(p, x)).collect();
                    if values.is_empty() {
                        return None;
                    }
                    let mean = values.iter().sum::<f64>() / values.len() as f64;
                    Some((x, mean, quantile(&values, 0.25)?, quantile(&values, 0.75)?))
                })
                .collect();
            Series { label: g.label.clone(), points }
        })
        .collect()
}

/// Rounds an axis range outward to "nice" tick steps.
fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).floor() * step;
    let mut out = Vec::new();
    let mut t = start;
    while t <= hi + step * 1e-9 || out.len() < 2 {
        out.push(t);
        t += step;
    }
    out
}

fn label_number(v: f64) -> String {
    if v.abs() >= 1e4 && v.fract() == 0.0 {
        format!("{}k", v / 1000.0)
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the plot. The output depends only on `spec`.
pub fn render_svg(spec: &PlotSpec) -> Result<String, HarnessError> {
    if spec.groups.is_empty() || spec.groups.iter().any(|g| g.curves.is_empty()) {
        return Err(HarnessError::InvalidCurve("a plot needs at least one curve per group".into()));
    }
    let max_step = spec.groups.iter().flat_map(|g| g.curves.iter()).map(|c| c.total_steps()).max().unwrap_or(0);
    if max_step == 0 {
        return Err(HarnessError::InvalidCurve("all curves are empty".into()));
    }
    let max_step = max_step as f64;
    let all = series(spec, max_step);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in all.iter().flat_map(|s| &s.points) {
        lo = lo.min(p.2).min(p.1);
        hi = hi.max(p.3).max(p.1);
    }
    let yt = ticks(lo, hi, 5);
    let (y0, y1) = (yt[0], *yt.last().expect("ticks are non-empty"));
    let xt = ticks(0.0, max_step, 5);
    let x1 = *xt.last().expect("ticks are non-empty");
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x1 * plot_w;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&spec.title)
    );
    for &t in &xt {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##,
            TOP,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            label_number(t)
        );
    }
    for &t in &yt {
        let y = sy(t);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            label_number(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&spec.y_label)
    );
    for (i, series) in all.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if series.points.is_empty() {
            continue;
        }
        let upper = series.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.3)));
        let lower = series.points.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.2)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ =
            writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.join(" "));
        let line: Vec<String> = series.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&series.label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(spec: &PlotSpec) -> Result<(), HarnessError> {
    let svg = render_svg(spec)?;
    std::fs::write(&spec.output, svg).map_err(|e| HarnessError::io(&spec.output, e))
}
