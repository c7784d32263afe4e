//! Minimal SVG 1.1 line/marker plots.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Line,
    Circle,
    Star,
    Triangle,
    Square,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub marker: Marker,
    pub color: &'static str,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let unit = raw / mag;
    let nice = if unit < 1.5 {
        1.0
    } else if unit < 3.0 {
        2.0
    } else if unit < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-6);
    (lo - pad, hi + pad)
}

fn marker_svg(out: &mut String, m: Marker, x: f64, y: f64, color: &str) {
    let r = 4.5;
    match m {
        Marker::Line => {}
        Marker::Circle => {
            let _ = write!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        }
        Marker::Square => {
            let _ = write!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{}" height="{}" fill="{color}"/>"#,
                x - r * 0.8,
                y - r * 0.8,
                r * 1.6,
                r * 1.6
            );
        }
        Marker::Triangle => {
            let _ = write!(
                out,
                r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"#,
                x,
                y - r * 1.2,
                x - r,
                y + r * 0.7,
                x + r,
                y + r * 0.7
            );
        }
        Marker::Star => {
            let pts: Vec<String> = (0..10)
                .map(|k| {
                    let rad = if k % 2 == 0 { r * 1.4 } else { r * 0.6 };
                    let a = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
                    format!("{:.2},{:.2}", x + rad * a.cos(), y + rad * a.sin())
                })
                .collect();
            let _ = write!(out, r#"<polygon points="{}" fill="{color}"/>"#, pts.join(" "));
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut out = String::new();
    let _ = write!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>
"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for (lo, hi, horizontal) in [(x0, x1, true), (y0, y1, false)] {
        let step = nice_step(hi - lo);
        let mut t = (lo / step).ceil() * step;
        while t <= hi + 1e-12 {
            let label = format!("{}", (t / step).round() * step);
            let label = if label.len() > 8 { format!("{t:.3}") } else { label };
            if horizontal {
                let x = px(t);
                let _ = writeln!(
                    out,
                    r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#,
                    H - BOTTOM,
                    H - BOTTOM + 5.0,
                    H - BOTTOM + 18.0
                );
            } else {
                let y = py(t);
                let _ = writeln!(
                    out,
                    r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#,
                    LEFT - 5.0,
                    LEFT - 8.0,
                    y + 4.0
                );
            }
            t += step;
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        escape(y_label)
    );

    for s in series {
        let _ = write!(out, r#"<g class="series" data-name="{}">"#, escape(&s.name));
        if s.marker == Marker::Line {
            let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = write!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                pts.join(" "),
                s.color
            );
        } else {
            for &(x, y) in &s.points {
                marker_svg(&mut out, s.marker, px(x), py(y), s.color);
            }
        }
        out.push_str("</g>\n");
    }

    // Legend, top right inside the frame.
    let lx = W - RIGHT - 170.0;
    for (i, s) in series.iter().enumerate() {
        let y = TOP + 16.0 + 18.0 * i as f64;
        if s.marker == Marker::Line {
            let _ = write!(
                out,
                r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/>"#,
                lx + 20.0,
                s.color
            );
        } else {
            marker_svg(&mut out, s.marker, lx + 10.0, y, s.color);
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 28.0, y + 4.0, escape(&s.name));
    }
    out.push_str("</svg>\n");
    out
}
