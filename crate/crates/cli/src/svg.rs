//! Minimal SVG line/marker plots with optional log axes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = [
    "#1f4e9c", "#c0392b", "#1e8449", "#8e44ad", "#d68910", "#117a8b",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub log: bool,
    /// Range used when there is no data.
    pub fallback: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub series: Vec<Series>,
    /// Dash-dotted horizontal guides.
    pub guides: Vec<(f64, String)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>, axis: Axis) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite() && (!axis.log || *v > 0.0)) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return axis.fallback;
    }
    if axis.log {
        let (a, b) = (lo.log10().floor(), hi.log10().ceil());
        let b = if b <= a { a + 1.0 } else { b };
        (10f64.powf(a), 10f64.powf(b))
    } else {
        let pad = if hi > lo {
            0.05 * (hi - lo)
        } else {
            0.5 * lo.abs().max(1e-3)
        };
        (lo - pad, hi + pad)
    }
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.log10().round() as i32, hi.log10().round() as i32);
        let stride = ((b - a) / 8).max(1);
        return (a..=b)
            .step_by(stride as usize)
            .map(|e| 10f64.powi(e))
            .collect();
    }
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let (a, b) = (
        (lo / step - 1e-9).ceil() as i64,
        (hi / step + 1e-9).floor() as i64,
    );
    (a..=b).map(|k| k as f64 * step).collect()
}

fn label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.log10().round() as i32)
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.into()
        }
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    x_log: bool,
    y_log: bool,
}

impl Frame {
    fn map(v: f64, (lo, hi): (f64, f64), log: bool) -> f64 {
        if log {
            (v.log10() - lo.log10()) / (hi.log10() - lo.log10())
        } else {
            (v - lo) / (hi - lo)
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + Self::map(x, self.x, self.x_log) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - Self::map(y, self.y, self.y_log) * (HEIGHT - TOP - BOTTOM)
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        let ok = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);
        ok(x, self.x_log) && ok(y, self.y_log)
    }
}

impl Plot {
    pub fn render(&self) -> String {
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.guides.iter().map(|g| g.0));
        let f = Frame {
            x: range(xs, self.x_axis),
            y: range(ys, self.y_axis),
            x_log: self.x_axis.log,
            y_log: self.y_axis.log,
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        for t in ticks(f.x.0, f.x.1, f.x_log) {
            let px = f.px(t);
            let _ = writeln!(
                s,
                r#"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
                y1 - 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y1 + 16.0,
                label(t, f.x_log)
            );
        }
        for t in ticks(f.y.0, f.y.1, f.y_log) {
            let py = f.py(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x0}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="black"/>"#,
                x0 + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                py + 4.0,
                label(t, f.y_log)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        for (y, text) in &self.guides {
            if !f.inside(f.x.0, *y) {
                continue;
            }
            let py = f.py(*y);
            let _ = writeln!(
                s,
                r#"<line x1="{x0}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="gray" stroke-dasharray="8,3,2,3"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="gray">{}</text>"#,
                x1 - 4.0,
                py - 4.0,
                escape(text)
            );
        }
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter(|(x, y)| f.inside(*x, *y))
                .map(|(x, y)| (f.px(*x), f.py(*y)))
                .collect();
            match series.style {
                Style::Line if pts.len() > 1 => {
                    let path: Vec<String> =
                        pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        path.join(" ")
                    );
                }
                _ => {}
            }
            for (x, y) in &pts {
                let _ = match series.style {
                    Style::Line => writeln!(
                        s,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#
                    ),
                    Style::Markers => writeln!(
                        s,
                        r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="none" stroke="{color}"/>"#,
                        x - 3.5,
                        y - 3.5
                    ),
                };
            }
            let ly = TOP + 14.0 + 16.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="10" height="3" fill="{color}"/>"#,
                x0 + 10.0,
                ly - 4.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#,
                x0 + 26.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
