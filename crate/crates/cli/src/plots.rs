//! Minimal SVG charts: forecast lines, radar and bar charts.

use std::f64::consts::PI;
use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marker {
    None,
    Circle,
    Cross,
}

#[derive(Clone, Debug)]
pub struct LineSeries {
    pub label: String,
    pub color: &'static str,
    pub marker: Marker,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
}

/// Line chart with a zero-based y axis. `x_label` formats x tick values.
pub fn line_chart(title: &str, y_label: &str, series: &[LineSeries], x_label: &dyn Fn(f64) -> String) -> String {
    let (w, h) = (860.0, 460.0);
    let (l, r, t, b) = (70.0, 170.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        if y.is_finite() {
            ymax = ymax.max(y);
        }
    }
    if !x0.is_finite() {
        x0 = 0.0;
        x1 = 1.0;
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let ymax = if ymax > 0.0 { ymax * 1.05 } else { 1.0 };
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let py = |y: f64| h - b - y / ymax * (h - t - b);

    let mut out = String::new();
    header(&mut out, w, h, title);
    let _ = writeln!(
        out,
        r#"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        w - l - r,
        h - t - b
    );
    for k in 0..=5 {
        let v = ymax * k as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{l:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            w - r,
            l - 4.0,
            y + 4.0,
            fmt_tick(v)
        );
        let xv = x0 + (x1 - x0) * k as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(xv),
            h - b + 16.0,
            escape(&x_label(xv))
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        if path.len() > 1 {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                path.join(" "),
                s.color
            );
        }
        for &(x, y) in s.points.iter().filter(|p| p.1.is_finite()) {
            let (cx, cy) = (px(x), py(y));
            match s.marker {
                Marker::None => {}
                Marker::Circle => {
                    let _ = writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{}"/>"#, s.color);
                }
                Marker::Cross => {
                    let _ = writeln!(
                        out,
                        r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{}" stroke-width="1.5"/>"#,
                        cx - 3.0,
                        cy - 3.0,
                        cx + 3.0,
                        cy + 3.0,
                        cx - 3.0,
                        cy + 3.0,
                        cx + 3.0,
                        cy - 3.0,
                        s.color
                    );
                }
            }
        }
        let ly = t + 12.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            w - r + 10.0,
            w - r + 30.0,
            s.color,
            w - r + 35.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Vertex positions of one radar polygon. Axis `k` points at angle
/// `-pi/2 + 2*pi*k/n`; a value of 1 lands on the outer ring.
pub fn radar_vertices(values: &[f64], cx: f64, cy: f64, radius: f64) -> Vec<(f64, f64)> {
    let n = values.len().max(1) as f64;
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let a = -PI / 2.0 + 2.0 * PI * k as f64 / n;
            (cx + radius * v * a.cos(), cy + radius * v * a.sin())
        })
        .collect()
}

/// Radar chart of normalized metrics, one polygon per entry.
pub fn radar_chart(title: &str, axes: &[String], polygons: &[(String, Vec<f64>)]) -> String {
    let (w, h) = (620.0, 520.0);
    let (cx, cy, radius) = (260.0, 275.0, 190.0);
    let mut out = String::new();
    header(&mut out, w, h, title);
    for ring in [0.25, 0.5, 0.75, 1.0] {
        let v = radar_vertices(&vec![ring; axes.len()], cx, cy, radius);
        let pts: Vec<String> = v.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(out, r##"<polygon points="{}" fill="none" stroke="#cccccc"/>"##, pts.join(" "));
    }
    let tips = radar_vertices(&vec![1.0; axes.len()], cx, cy, radius);
    let labels = radar_vertices(&vec![1.0; axes.len()], cx, cy, radius + 18.0);
    for ((name, tip), lab) in axes.iter().zip(&tips).zip(&labels) {
        let _ = writeln!(
            out,
            r##"<line x1="{cx:.1}" y1="{cy:.1}" x2="{:.2}" y2="{:.2}" stroke="#999999"/><text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            tip.0,
            tip.1,
            lab.0,
            lab.1 + 4.0,
            escape(name)
        );
    }
    for (i, (name, values)) in polygons.iter().enumerate() {
        let v = radar_vertices(values, cx, cy, radius);
        let pts: Vec<String> = v.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let c = color(i);
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{c}" fill-opacity="0.15" stroke="{c}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let ly = 50.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="490" y="{:.1}" width="12" height="12" fill="{c}"/><text x="508" y="{:.1}">{}</text>"#,
            ly - 10.0,
            ly,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Vertical bar chart; NaN bars are drawn as empty slots.
pub fn bar_chart(title: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let (w, h) = (560.0, 380.0);
    let (l, r, t, b) = (70.0, 20.0, 40.0, 50.0);
    let ymax = bars.iter().map(|b| b.1).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let ymax = if ymax > 0.0 { ymax * 1.1 } else { 1.0 };
    let mut out = String::new();
    header(&mut out, w, h, title);
    let pw = w - l - r;
    let ph = h - t - b;
    let _ = writeln!(
        out,
        r#"<line x1="{l:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        h - b,
        w - r,
        h - b
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    let slot = pw / bars.len().max(1) as f64;
    for (i, (name, v)) in bars.iter().enumerate() {
        let x = l + slot * i as f64;
        if v.is_finite() {
            let bh = v / ymax * ph;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="{}"/><text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x + slot * 0.15,
                h - b - bh,
                slot * 0.7,
                color(i),
                x + slot / 2.0,
                h - b - bh - 4.0,
                fmt_tick(*v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x + slot / 2.0,
            h - b + 16.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
