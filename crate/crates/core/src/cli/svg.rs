//! Minimal line-plot SVG writer: polylines, axis ticks, optional right axis,
//! and open-circle markers.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 70.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dashed: bool,
    /// Plot against the right-hand axis.
    pub right_axis: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, color: &'static str, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            color,
            xs,
            ys,
            dashed: false,
            right_axis: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn on_right_axis(mut self) -> Self {
        self.right_axis = true;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub y2_label: String,
    pub series: Vec<Series>,
    /// Open circles in left-axis coordinates.
    pub markers: Vec<(f64, f64)>,
}

#[derive(Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of<'a>(values: impl Iterator<Item = &'a f64>) -> Option<Self> {
        let (lo, hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        if lo > hi {
            return None;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            return Some(Range {
                lo: lo - 0.5,
                hi: hi + 0.5,
            });
        }
        Some(Range { lo, hi })
    }

    fn pad_y(self) -> Self {
        let pad = 0.05 * (self.hi - self.lo);
        Range {
            lo: self.lo - pad,
            hi: self.hi + pad,
        }
    }

    fn ticks(self) -> Vec<f64> {
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Plot {
    pub fn render(&self) -> String {
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let x = Range::of(self.series.iter().flat_map(|s| s.xs.iter())).unwrap_or(Range { lo: 0.0, hi: 1.0 });
        let left = Range::of(
            self.series
                .iter()
                .filter(|s| !s.right_axis)
                .flat_map(|s| s.ys.iter())
                .chain(self.markers.iter().map(|(_, y)| y)),
        )
        .unwrap_or(Range { lo: 0.0, hi: 1.0 })
        .pad_y();
        let right = Range::of(self.series.iter().filter(|s| s.right_axis).flat_map(|s| s.ys.iter())).map(Range::pad_y);

        let sx = |v: f64| LEFT + (v - x.lo) / (x.hi - x.lo) * plot_w;
        let sy = |v: f64, r: Range| TOP + (r.hi - v) / (r.hi - r.lo) * plot_h;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );

        for t in x.ticks() {
            let px = sx(t);
            let _ = writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{b2}" stroke="black"/><text x="{px:.2}" y="{ty}" text-anchor="middle">{}</text>"#,
                fmt_tick(t),
                b = TOP + plot_h,
                b2 = TOP + plot_h + 5.0,
                ty = TOP + plot_h + 18.0
            );
        }
        for t in left.ticks() {
            let py = sy(t, left);
            let _ = writeln!(
                out,
                r#"<line x1="{l2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{tx}" y="{py:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
                fmt_tick(t),
                l2 = LEFT - 5.0,
                tx = LEFT - 8.0
            );
        }
        if let Some(r) = right {
            let edge = LEFT + plot_w;
            for t in r.ticks() {
                let py = sy(t, r);
                let _ = writeln!(
                    out,
                    r#"<line x1="{edge}" y1="{py:.2}" x2="{e2}" y2="{py:.2}" stroke="black"/><text x="{tx}" y="{py:.2}" dominant-baseline="middle">{}</text>"#,
                    fmt_tick(t),
                    e2 = edge + 5.0,
                    tx = edge + 8.0
                );
            }
            let _ = writeln!(
                out,
                r#"<text transform="translate({},{}) rotate(90)" text-anchor="middle">{}</text>"#,
                WIDTH - 15.0,
                TOP + plot_h / 2.0,
                escape(&self.y2_label)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text transform="translate(18,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let range = if s.right_axis { right.unwrap_or(left) } else { left };
            let points: Vec<String> =
                s.xs.iter()
                    .zip(&s.ys)
                    .map(|(a, b)| format!("{:.2},{:.2}", sx(*a), sy(*b, range)))
                    .collect();
            let dash = if s.dashed { r#" stroke-dasharray="4 3""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                s.color,
                points.join(" ")
            );
            let ly = TOP + 14.0 + 16.0 * i as f64;
            let lx = LEFT + 10.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/><text x="{}" y="{ly}" dominant-baseline="middle">{}</text>"#,
                lx + 20.0,
                s.color,
                lx + 26.0,
                escape(&s.label)
            );
        }
        for (mx, my) in &self.markers {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="none" stroke="black" stroke-width="1.5"/>"#,
                sx(*mx),
                sy(*my, left)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
