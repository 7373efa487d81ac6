//! Minimal standalone SVG charts.

use std::fmt::Write;

use crate::evaluation::BoxSummary;

const W: f64 = 760.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series<'a> {
    pub label: String,
    pub points: &'a [(f64, f64)],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>
"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        escape(title)
    );
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn y_axis(out: &mut String, lo: f64, hi: f64, label: &str) {
    let y0 = H - BOTTOM;
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{y0}" stroke="black"/>"#
    );
    for i in 0..=5 {
        let v = lo + (hi - lo) * i as f64 / 5.0;
        let y = y0 - (y0 - TOP) * i as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + (y0 - TOP) / 2.0,
        escape(label)
    );
}

/// One polyline per series.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (x_lo, x_hi) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y_lo, y_hi) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let (x1, y0) = (W - RIGHT, H - BOTTOM);
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (x1 - LEFT);
    let sy = |y: f64| y0 - (y - y_lo) / (y_hi - y_lo) * (y0 - TOP);
    y_axis(&mut out, y_lo, y_hi, y_label);
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    for i in 0..=5 {
        let v = x_lo + (x_hi - x_lo) * i as f64 / 5.0;
        let x = sx(v);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 20.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + (x1 - LEFT) / 2.0,
        H - 15.0,
        escape(x_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{:.2}" width="14" height="3" fill="{color}"/><text x="{}" y="{:.2}">{}</text>"#,
            x1 + 15.0,
            ly,
            x1 + 34.0,
            ly + 5.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Box-and-whisker chart, one box per labelled summary.
pub fn box_plot(title: &str, y_label: &str, boxes: &[(String, BoxSummary)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (lo, hi) = bounds(boxes.iter().flat_map(|(_, b)| {
        [b.whisker_low, b.whisker_high]
            .into_iter()
            .chain(b.outliers.iter().copied())
    }));
    let (x1, y0) = (W - RIGHT + 120.0, H - BOTTOM);
    let sy = |y: f64| y0 - (y - lo) / (hi - lo) * (y0 - TOP);
    y_axis(&mut out, lo, hi, y_label);
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    let slot = (x1 - LEFT) / boxes.len().max(1) as f64;
    for (i, (label, b)) in boxes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let cx = LEFT + slot * (i as f64 + 0.5);
        let half = (slot * 0.3).min(30.0);
        let _ = writeln!(
            out,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            sy(b.whisker_low),
            sy(b.whisker_high)
        );
        for w in [b.whisker_low, b.whisker_high] {
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
                cx - half / 2.0,
                sy(w),
                cx + half / 2.0,
                sy(w)
            );
        }
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35" stroke="{color}"/>"#,
            cx - half,
            sy(b.q3),
            2.0 * half,
            (sy(b.q1) - sy(b.q3)).max(0.5)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            sy(b.median),
            cx + half,
            sy(b.median)
        );
        let _ = writeln!(
            out,
            r#"<circle cx="{cx:.2}" cy="{:.2}" r="3" fill="black"/>"#,
            sy(b.mean)
        );
        for &o in &b.outliers {
            let _ = writeln!(
                out,
                r#"<circle cx="{cx:.2}" cy="{:.2}" r="2.5" fill="none" stroke="{color}"/>"#,
                sy(o)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}
