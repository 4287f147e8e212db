//! Performance gain plot: balanced-accuracy gain against ASDD, one panel
//! per facet level, written as a standalone SVG document.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::results::GainRow;
use crate::balancing::Method;
use crate::error::{Error, Result};
use crate::explain::ProfileKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Facet {
    Model,
    Dataset,
}

impl FromStr for Facet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(Facet::Model),
            "dataset" => Ok(Facet::Dataset),
            _ => Err(Error::InvalidArgument(format!("unknown facet `{s}`"))),
        }
    }
}

const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 240.0;
const LEFT: f64 = 58.0;
const RIGHT: f64 = 14.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 46.0;
const LEGEND_W: f64 = 170.0;
const TITLE_H: f64 = 34.0;
const MAX_COLUMNS: usize = 3;

const STYLES: [(&str, &str, Shape); 6] = [
    ("random_under", "#1b9e77", Shape::Circle),
    ("near_miss", "#d95f02", Shape::Square),
    ("random_over", "#7570b3", Shape::Triangle),
    ("smote", "#e7298a", Shape::Diamond),
    ("borderline_smote", "#66a61e", Shape::TriangleDown),
    ("smote_tomek", "#e6ab02", Shape::Cross),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Circle,
    Square,
    Triangle,
    Diamond,
    TriangleDown,
    Cross,
}

fn style(method: &str) -> (&'static str, Shape) {
    STYLES
        .iter()
        .find(|(m, _, _)| *m == method)
        .map(|&(_, c, s)| (c, s))
        .unwrap_or(("#555555", Shape::Circle))
}

fn marker(shape: Shape, x: f64, y: f64) -> String {
    let r = 4.5;
    match shape {
        Shape::Circle => format!(
            "M{:.2},{:.2}a{r},{r} 0 1,0 {:.2},0a{r},{r} 0 1,0 {:.2},0Z",
            x - r,
            y,
            2.0 * r,
            -2.0 * r
        ),
        Shape::Square => format!("M{:.2},{:.2}h{:.2}v{:.2}h{:.2}Z", x - r, y - r, 2.0 * r, 2.0 * r, -2.0 * r),
        Shape::Triangle => format!("M{:.2},{:.2}L{:.2},{:.2}L{:.2},{:.2}Z", x, y - r, x + r, y + r, x - r, y + r),
        Shape::TriangleDown => format!("M{:.2},{:.2}L{:.2},{:.2}L{:.2},{:.2}Z", x, y + r, x + r, y - r, x - r, y - r),
        Shape::Diamond => format!("M{:.2},{:.2}L{:.2},{:.2}L{:.2},{:.2}L{:.2},{:.2}Z", x, y - r, x + r, y, x, y + r, x - r, y),
        Shape::Cross => format!(
            "M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}",
            x - r,
            y - r,
            x + r,
            y + r,
            x - r,
            y + r,
            x + r,
            y - r
        ),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Tick positions covering `[lo, hi]` at a 1/2/5 × 10^k step.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 4.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|i| i as f64 * step).collect(), decimals)
}

fn padded(lo: f64, hi: f64, floor_at_zero: bool) -> (f64, f64) {
    let span = hi - lo;
    let pad = if span > 0.0 { span * 0.06 } else { 0.05_f64.max(hi.abs() * 0.1) };
    let lo = if floor_at_zero { (lo - pad).max(0.0) } else { lo - pad };
    (lo, hi + pad)
}

/// Build the SVG document for a gain table.
pub fn gain_plot_svg(table: &[GainRow], facet: Facet, kind: ProfileKind) -> Result<String> {
    if table.is_empty() {
        return Err(Error::InvalidData("performance gain table is empty; nothing to plot".into()));
    }
    if table.iter().any(|r| !r.gain.is_finite() || !r.asdd.is_finite()) {
        return Err(Error::InvalidData("gain table holds non-finite values".into()));
    }
    let mut panels: BTreeMap<&str, Vec<&GainRow>> = BTreeMap::new();
    for r in table {
        let key = match facet {
            Facet::Model => r.model.as_str(),
            Facet::Dataset => r.dataset.as_str(),
        };
        panels.entry(key).or_default().push(r);
    }

    let gmin = table.iter().map(|r| r.gain).fold(0.0, f64::min);
    let gmax = table.iter().map(|r| r.gain).fold(0.0, f64::max);
    let amax = table.iter().map(|r| r.asdd).fold(0.0, f64::max);
    let (x_lo, x_hi) = padded(gmin, gmax, false);
    let (y_lo, y_hi) = padded(0.0, amax, true);
    let (x_ticks, x_dec) = ticks(x_lo, x_hi);
    let (y_ticks, y_dec) = ticks(y_lo, y_hi);

    let columns = panels.len().min(MAX_COLUMNS);
    let rows = panels.len().div_ceil(MAX_COLUMNS);
    let width = columns as f64 * PANEL_W + LEGEND_W;
    let height = TITLE_H + rows as f64 * PANEL_H;
    let inner_w = PANEL_W - LEFT - RIGHT;
    let inner_h = PANEL_H - TOP - BOTTOM;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" font-size="15" text-anchor="middle">Performance gain plot ({})</text>"#,
        (width - LEGEND_W) / 2.0,
        kind.as_str().to_uppercase()
    );

    for (p, (level, points)) in panels.iter().enumerate() {
        let ox = (p % MAX_COLUMNS) as f64 * PANEL_W;
        let oy = TITLE_H + (p / MAX_COLUMNS) as f64 * PANEL_H;
        let px = |v: f64| ox + LEFT + (v - x_lo) / (x_hi - x_lo) * inner_w;
        let py = |v: f64| oy + TOP + inner_h - (v - y_lo) / (y_hi - y_lo) * inner_h;

        let _ = writeln!(s, r#"<g class="panel" data-facet="{}">"#, escape(level));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" font-weight="bold">{}</text>"#,
            ox + LEFT + inner_w / 2.0,
            oy + TOP - 10.0,
            escape(level)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{inner_w:.2}" height="{inner_h:.2}" fill="#f7f7f7" stroke="#999999"/>"##,
            ox + LEFT,
            oy + TOP
        );
        for &t in &x_ticks {
            let x = px(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{:.*}</text>"##,
                oy + TOP,
                oy + TOP + inner_h,
                oy + TOP + inner_h + 14.0,
                x_dec,
                t
            );
        }
        for &t in &y_ticks {
            let y = py(t);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{:.*}</text>"##,
                ox + LEFT,
                ox + LEFT + inner_w,
                ox + LEFT - 5.0,
                y + 4.0,
                y_dec,
                t
            );
        }
        let zero = px(0.0);
        let _ = writeln!(
            s,
            r##"<line class="zero-line" x1="{zero:.2}" y1="{:.2}" x2="{zero:.2}" y2="{:.2}" stroke="#333333" stroke-dasharray="4,3"/>"##,
            oy + TOP,
            oy + TOP + inner_h
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Balanced accuracy gain</text>"#,
            ox + LEFT + inner_w / 2.0,
            oy + PANEL_H - 12.0
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle">ASDD ({})</text>"#,
            ox + 14.0,
            oy + TOP + inner_h / 2.0,
            kind.as_str().to_uppercase()
        );
        for r in points {
            let (color, shape) = style(&r.method);
            let (fill, stroke) = if shape == Shape::Cross { ("none", color) } else { (color, "#222222") };
            let _ = writeln!(
                s,
                r#"<path class="point" data-dataset="{}" data-method="{}" d="{}" fill="{fill}" stroke="{stroke}" stroke-width="{}"/>"#,
                escape(&r.dataset),
                escape(&r.method),
                marker(shape, px(r.gain), py(r.asdd)),
                if shape == Shape::Cross { "2" } else { "0.6" }
            );
        }
        s.push_str("</g>\n");
    }

    let mut methods: Vec<&str> = table.iter().map(|r| r.method.as_str()).collect();
    methods.sort_by_key(|m| (Method::from_str(m).map(|m| m as usize).unwrap_or(usize::MAX), *m));
    methods.dedup();
    let lx = columns as f64 * PANEL_W + 12.0;
    let _ = writeln!(s, r#"<g class="legend"><text x="{lx:.2}" y="{:.2}" font-weight="bold">Method</text>"#, TITLE_H + TOP);
    for (i, m) in methods.iter().enumerate() {
        let y = TITLE_H + TOP + 20.0 + i as f64 * 18.0;
        let (color, shape) = style(m);
        let (fill, stroke) = if shape == Shape::Cross { ("none", color) } else { (color, "#222222") };
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="{fill}" stroke="{stroke}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            marker(shape, lx + 6.0, y - 4.0),
            lx + 18.0,
            y,
            escape(m)
        );
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

/// Render the plot and write it to `out`; returns the document.
pub fn render_gain_plot(table: &[GainRow], facet: Facet, kind: ProfileKind, out: &Path) -> Result<String> {
    let svg = gain_plot_svg(table, facet, kind)?;
    std::fs::write(out, &svg).map_err(|e| Error::io(out, e))?;
    Ok(svg)
}
