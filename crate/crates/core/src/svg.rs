//! Minimal SVG rendering: heatmaps as one `<rect>` per cell, curves as
//! polylines, bar charts. Output is deterministic text.
//!
//! Heatmaps use a 256-level colormap obtained by linear interpolation
//! between nine anchor colours sampled from viridis (dark purple at 0,
//! yellow at 1).

use std::fmt::Write as _;

const VIRIDIS_ANCHORS: [(u8, u8, u8); 9] = [
    (68, 1, 84),
    (71, 44, 122),
    (59, 81, 139),
    (44, 113, 142),
    (33, 144, 141),
    (39, 173, 129),
    (92, 200, 99),
    (170, 220, 50),
    (253, 231, 37),
];

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

/// Colour of level `k` (0..=255) in the heatmap colormap.
pub fn colormap(level: u8) -> (u8, u8, u8) {
    let x = level as f64 / 255.0 * (VIRIDIS_ANCHORS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS_ANCHORS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (VIRIDIS_ANCHORS[i], VIRIDIS_ANCHORS[i + 1]);
    let lerp = |p: u8, q: u8| (p as f64 + f * (q as f64 - p as f64)).round() as u8;
    (lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

/// Quantizes `v ∈ [lo, hi]` to a colormap level.
pub fn level(v: f64, lo: f64, hi: f64) -> u8 {
    if !(hi > lo) || !v.is_finite() {
        return 0;
    }
    (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * 255.0).round() as u8
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (f.px(f.x.0), f.px(f.x.1));
    let (y0, y1) = (f.py(f.y.0), f.py(f.y.1));
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for t in ticks(f.x.0, f.x.1, 5) {
        let x = f.px(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 19.0,
            fmt_tick(t)
        );
    }
    for t in ticks(f.y.0, f.y.1, 5) {
        let y = f.py(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        0.5 * (x0 + x1),
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(20,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        0.5 * (y0 + y1),
        escape(y_label)
    );
}

/// Heatmap of `values[(row, col)]`, where rows follow `y` and columns `x`.
/// Both coordinate vectors must be ascending and match the value shape.
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    x: &[f64],
    y: &[f64],
    value: impl Fn(usize, usize) -> f64,
) -> String {
    let mut out = String::new();
    open(&mut out, title);
    if x.is_empty() || y.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let step = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { 1.0 };
    let (dx, dy) = (step(x), step(y));
    let f = Frame::new((x[0] - 0.5 * dx, x[x.len() - 1] + 0.5 * dx), (y[0] - 0.5 * dy, y[y.len() - 1] + 0.5 * dy));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in 0..y.len() {
        for c in 0..x.len() {
            let v = value(r, c);
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let w = (f.px(x[0] + dx) - f.px(x[0])).abs();
    let h = (f.py(y[0]) - f.py(y[0] + dy)).abs();
    let _ = writeln!(out, r#"<g shape-rendering="crispEdges">"#);
    for (r, &yv) in y.iter().enumerate() {
        for (c, &xv) in x.iter().enumerate() {
            let (cr, cg, cb) = colormap(level(value(r, c), lo, hi));
            let _ = writeln!(
                out,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#{cr:02x}{cg:02x}{cb:02x}"/>"##,
                f.px(xv - 0.5 * dx),
                f.py(yv + 0.5 * dy),
                w + 0.05,
                h + 0.05
            );
        }
    }
    let _ = writeln!(out, "</g>");
    axes(&mut out, &f, x_label, y_label);
    out.push_str("</svg>\n");
    out
}

/// One curve of a line plot.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Line plot of several series sharing axes.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let mut out = String::new();
    open(&mut out, title);
    let finite = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut xl, mut xh, mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        xl = xl.min(x);
        xh = xh.max(x);
        yl = yl.min(y);
        yh = yh.max(y);
    }
    if !xl.is_finite() {
        out.push_str("</svg>\n");
        return out;
    }
    let pad = 0.05 * (yh - yl).max(1e-12 * yh.abs().max(1.0));
    let f = Frame::new((xl, xh), (yl - pad, yh + pad));
    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ =
            writeln!(out, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.8" points="{}"/>"#, pts.join(" "));
        let ly = MARGIN_TOP + 16.0 + 16.0 * k as f64;
        let lx = WIDTH - MARGIN_RIGHT - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(s.label)
        );
    }
    axes(&mut out, &f, x_label, y_label);
    out.push_str("</svg>\n");
    out
}

/// Vertical bar chart; `reference` draws a tick mark per bar when present.
pub fn bar_chart(title: &str, y_label: &str, bars: &[(String, f64, Option<f64>)], y_range: (f64, f64)) -> String {
    let mut out = String::new();
    open(&mut out, title);
    let n = bars.len().max(1) as f64;
    let f = Frame::new((0.0, n), y_range);
    let slot = f.px(1.0) - f.px(0.0);
    for (k, (label, value, reference)) in bars.iter().enumerate() {
        let x = f.px(k as f64) + 0.2 * slot;
        let top = f.py(value.clamp(y_range.0, y_range.1));
        let base = f.py(y_range.0);
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            0.6 * slot,
            (base - top).max(0.0),
            PALETTE[0]
        );
        if let Some(r) = reference {
            let ry = f.py(r.clamp(y_range.0, y_range.1));
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{ry:.2}" x2="{:.2}" y2="{ry:.2}" stroke="{}" stroke-width="2.5"/>"#,
                x - 0.1 * slot,
                x + 0.7 * slot,
                PALETTE[1]
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x + 0.3 * slot,
            base + 18.0,
            escape(label)
        );
    }
    let (x0, x1) = (f.px(0.0), f.px(n));
    for t in ticks(y_range.0, y_range.1, 5) {
        let y = f.py(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<line x1="{x0:.2}" y1="{:.2}" x2="{x1:.2}" y2="{:.2}" stroke="black"/><line x1="{x0:.2}" y1="{:.2}" x2="{x0:.2}" y2="{:.2}" stroke="black"/>"#,
        f.py(y_range.0),
        f.py(y_range.0),
        f.py(y_range.0),
        f.py(y_range.1)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(20,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        0.5 * (f.py(y_range.0) + f.py(y_range.1)),
        escape(y_label)
    );
    out.push_str("</svg>\n");
    out
}
