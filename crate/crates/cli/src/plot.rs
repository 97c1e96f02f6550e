//! Static SVG line plots and heatmaps.
//!
//! Output depends only on the input numbers, which are printed with fixed
//! precision, so regenerating a plot from the same data gives the same bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            x,
            y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotStyle {
    Line,
    /// Each series is one row of the map; all rows share the `x` values.
    Heatmap,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Labels {
    pub title: String,
    pub x: String,
    pub y: String,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Blue-white-red scale for `v` in `[-1, 1]`.
fn color(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (r, g, b) = if v >= 0.0 {
        (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
    } else {
        (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

fn frame(svg: &mut String, labels: &Labels, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let px = LEFT + f * pw;
        let py = TOP + ph - f * ph;
        let _ = writeln!(
            svg,
            r#"<text x="{px:.1}" y="{:.1}" font-size="11" text-anchor="middle">{:.3}</text>"#,
            TOP + ph + 16.0,
            x0 + f * (x1 - x0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{:.3e}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            y0 + f * (y1 - y0)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&labels.title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&labels.x)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&labels.y)
    );
}

pub fn render_svg(series: &[Series], style: PlotStyle, labels: &Labels) -> Result<String, CliError> {
    if series.is_empty() {
        return Err(CliError::Config("nothing to plot".into()));
    }
    for s in series {
        if s.x.len() != s.y.len() || s.x.is_empty() {
            return Err(CliError::Config(format!("series `{}` has mismatched or empty columns", s.label)));
        }
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let xr = range(series.iter().flat_map(|s| s.x.iter().copied()));
    match style {
        PlotStyle::Line => {
            let yr = range(series.iter().flat_map(|s| s.y.iter().copied()));
            frame(&mut svg, labels, xr, yr);
            for (k, s) in series.iter().enumerate() {
                let c = COLORS[k % COLORS.len()];
                let pts: Vec<String> = s
                    .x
                    .iter()
                    .zip(&s.y)
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .map(|(x, y)| {
                        let px = LEFT + (x - xr.0) / (xr.1 - xr.0) * pw;
                        let py = TOP + ph - (y - yr.0) / (yr.1 - yr.0) * ph;
                        format!("{px:.2},{py:.2}")
                    })
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
                    pts.join(" ")
                );
                let ly = TOP + 14.0 + 18.0 * k as f64;
                let lx = WIDTH - RIGHT + 10.0;
                let _ = writeln!(
                    svg,
                    r#"<line x1="{lx}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{c}" stroke-width="2"/>"#,
                    lx + 20.0
                );
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
                    lx + 26.0,
                    ly + 4.0,
                    escape(&s.label)
                );
            }
        }
        PlotStyle::Heatmap => {
            let rows = series.len();
            let cols = series[0].x.len();
            if series.iter().any(|s| s.x != series[0].x) {
                return Err(CliError::Config("heatmap rows must share their x values".into()));
            }
            let scale = series
                .iter()
                .flat_map(|s| s.y.iter())
                .filter(|v| v.is_finite())
                .fold(0.0f64, |a, v| a.max(v.abs()))
                .max(f64::MIN_POSITIVE);
            frame(&mut svg, labels, xr, (0.0, rows as f64));
            let cw = pw / cols as f64;
            let rh = ph / rows as f64;
            for (r, s) in series.iter().enumerate() {
                let py = TOP + ph - (r + 1) as f64 * rh;
                for (j, v) in s.y.iter().enumerate() {
                    let _ = writeln!(
                        svg,
                        r#"<rect x="{:.2}" y="{py:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                        LEFT + j as f64 * cw,
                        cw + 0.05,
                        rh + 0.05,
                        color(v / scale)
                    );
                }
            }
            let lx = WIDTH - RIGHT + 10.0;
            for (k, (v, name)) in [(1.0, "max"), (0.0, "0"), (-1.0, "-max")].iter().enumerate() {
                let ly = TOP + 10.0 + 20.0 * k as f64;
                let _ = writeln!(
                    svg,
                    r#"<rect x="{lx}" y="{ly:.1}" width="14" height="14" fill="{}" stroke="black"/>"#,
                    color(*v)
                );
                let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="11">{name}</text>"#, lx + 20.0, ly + 11.0);
            }
            let _ = writeln!(
                svg,
                r#"<text x="{lx}" y="{:.1}" font-size="11">max = {scale:.3e}</text>"#,
                TOP + 84.0
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(series: &[Series], style: PlotStyle, labels: &Labels, path: &Path) -> Result<(), CliError> {
    let svg = render_svg(series, style, labels)?;
    std::fs::write(path, svg).map_err(|e| CliError::io(path, e))
}
