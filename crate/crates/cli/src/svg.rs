//! Minimal SVG plots: curves with optional reference circles, panels of
//! such plots, and heatmaps with a fixed diverging color map.

use std::fmt::Write as _;

use wgscat_core::solver::GridSpec;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: [f64; 4] = [40.0, 20.0, 50.0, 70.0]; // top, right, bottom, left

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Polyline data; `None` or non-finite points break the line.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<Option<[f64; 2]>>,
    pub color: &'static str,
    pub dashed: bool,
    /// Dots at the samples, so that a curve pinned to one value stays visible.
    pub markers: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<Option<[f64; 2]>>, color: &'static str) -> Self {
        Self {
            label: label.into(),
            points,
            color,
            dashed: false,
            markers: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn with_markers(mut self) -> Self {
        self.markers = true;
        self
    }

    fn finite(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.points.iter().flatten().copied().filter(|p| p[0].is_finite() && p[1].is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct Circle {
    pub label: String,
    pub center: [f64; 2],
    pub radius: f64,
    pub color: &'static str,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub circles: Vec<Circle>,
    /// Same scale on both axes, for curves in the complex plane.
    pub equal_aspect: bool,
}

/// Round tick positions covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    let ticks = (first..=last).map(|i| i as f64 * step + 0.0).collect();
    (ticks, decimals)
}

fn tick_label(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(
            out,
            r##"<rect x="{l:.2}" y="{t:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#333"/>"##
        );
        let (xt, xd) = nice_ticks(self.x.0, self.x.1, 6);
        for v in xt {
            let x = self.px(v);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
                t + h,
                t + h + 5.0,
                t + h + 18.0,
                tick_label(v, xd)
            );
        }
        let (yt, yd) = nice_ticks(self.y.0, self.y.1, 6);
        for v in yt {
            let y = self.py(v);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"##,
                l - 5.0,
                l - 8.0,
                y + 4.0,
                tick_label(v, yd)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            l + w / 2.0,
            t + h + 38.0,
            esc(x_label)
        );
        let (yx, yy) = (l - 52.0, t + h / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="{yx:.2}" y="{yy:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 {yx:.2} {yy:.2})">{}</text>"#,
            esc(y_label)
        );
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            circles: Vec::new(),
            equal_aspect: false,
        }
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn with_circle(mut self, label: impl Into<String>, center: [f64; 2], radius: f64, color: &'static str) -> Self {
        self.circles.push(Circle {
            label: label.into(),
            center,
            radius,
            color,
        });
        self
    }

    pub fn equal_aspect(mut self) -> Self {
        self.equal_aspect = true;
        self
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = x;
        let mut grow = |p: [f64; 2]| {
            x = (x.0.min(p[0]), x.1.max(p[0]));
            y = (y.0.min(p[1]), y.1.max(p[1]));
        };
        for s in &self.series {
            s.finite().for_each(&mut grow);
        }
        for c in &self.circles {
            grow([c.center[0] - c.radius, c.center[1] - c.radius]);
            grow([c.center[0] + c.radius, c.center[1] + c.radius]);
        }
        (padded(x.0, x.1), padded(y.0, y.1))
    }

    fn render_at(&self, out: &mut String, id: usize, ox: f64, oy: f64, w: f64, h: f64) {
        let (mut xr, mut yr) = self.bounds();
        let (pw, ph) = (w - MARGIN[1] - MARGIN[3], h - MARGIN[0] - MARGIN[2]);
        if self.equal_aspect {
            let scale = (pw / (xr.1 - xr.0)).min(ph / (yr.1 - yr.0));
            let grow = |r: (f64, f64), len: f64| {
                let mid = 0.5 * (r.0 + r.1);
                (mid - 0.5 * len / scale, mid + 0.5 * len / scale)
            };
            xr = grow(xr, pw);
            yr = grow(yr, ph);
        }
        let f = Frame {
            left: ox + MARGIN[3],
            top: oy + MARGIN[0],
            width: pw,
            height: ph,
            x: xr,
            y: yr,
        };
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
            ox + w / 2.0,
            oy + 24.0,
            esc(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<clipPath id="clip{id}"><rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}"/></clipPath>"#,
            f.left, f.top
        );
        let _ = writeln!(out, r#"<g clip-path="url(#clip{id})">"#);
        for c in &self.circles {
            let rx = c.radius / (xr.1 - xr.0) * pw;
            let ry = c.radius / (yr.1 - yr.0) * ph;
            let _ = writeln!(
                out,
                r#"<ellipse cx="{:.2}" cy="{:.2}" rx="{rx:.2}" ry="{ry:.2}" fill="none" stroke="{}" stroke-dasharray="4 3"/>"#,
                f.px(c.center[0]),
                f.py(c.center[1]),
                c.color
            );
        }
        for s in &self.series {
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let mut segment: Vec<String> = Vec::new();
            let mut flush = |segment: &mut Vec<String>| {
                if segment.len() > 1 {
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                        s.color,
                        segment.join(" ")
                    );
                }
                segment.clear();
            };
            for p in &s.points {
                match p {
                    Some(p) if p[0].is_finite() && p[1].is_finite() => {
                        segment.push(format!("{:.2},{:.2}", f.px(p[0]), f.py(p[1])))
                    }
                    _ => flush(&mut segment),
                }
            }
            flush(&mut segment);
            if s.markers {
                for p in s.finite() {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}"/>"#,
                        f.px(p[0]),
                        f.py(p[1]),
                        s.color
                    );
                }
            }
        }
        out.push_str("</g>\n");
        f.axes(out, &self.x_label, &self.y_label);

        let entries: Vec<(&str, &str)> = self
            .series
            .iter()
            .map(|s| (s.label.as_str(), s.color))
            .chain(self.circles.iter().map(|c| (c.label.as_str(), c.color)))
            .filter(|(l, _)| !l.is_empty())
            .collect();
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = f.top + 14.0 + 16.0 * i as f64;
            let x = f.left + f.width - 150.0;
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{y:.2}" font-size="11">{}</text>"#,
                y - 4.0,
                x + 18.0,
                y - 4.0,
                x + 24.0,
                esc(label)
            );
        }
    }

    pub fn to_svg(&self) -> String {
        panels(std::slice::from_ref(self), 1)
    }
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Plots laid out on a grid with `cols` columns.
pub fn panels(plots: &[Plot], cols: usize) -> String {
    let cols = cols.max(1);
    let rows = plots.len().div_ceil(cols).max(1);
    let mut out = header(WIDTH * cols as f64, HEIGHT * rows as f64);
    for (i, p) in plots.iter().enumerate() {
        let (r, c) = (i / cols, i % cols);
        p.render_at(&mut out, i, c as f64 * WIDTH, r as f64 * HEIGHT, WIDTH, HEIGHT);
    }
    out.push_str("</svg>\n");
    out
}

/// Blue, light gray, red at `t = -1, 0, 1`.
pub fn diverging(t: f64) -> String {
    const NEG: [f64; 3] = [59.0, 76.0, 192.0];
    const MID: [f64; 3] = [240.0, 240.0, 240.0];
    const POS: [f64; 3] = [180.0, 4.0, 38.0];
    let t = if t.is_finite() { t.clamp(-1.0, 1.0) } else { 0.0 };
    let (end, s) = if t < 0.0 { (NEG, -t) } else { (POS, t) };
    let c: Vec<u8> = (0..3).map(|i| (MID[i] + (end[i] - MID[i]) * s).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Scalar field on a regular grid; `None` marks points outside the domain.
pub struct Heatmap<'a> {
    pub title: String,
    pub grid: &'a GridSpec,
    pub values: Vec<Option<f64>>,
}

impl Heatmap<'_> {
    /// Color scale symmetric about zero, saturating at the largest modulus.
    pub fn to_svg(&self) -> String {
        let g = self.grid;
        let cell = (560.0 / g.nx.max(g.ny) as f64).clamp(2.0, 16.0);
        let (pw, ph) = (g.nx as f64 * cell, g.ny as f64 * cell);
        let (w, h) = (pw + MARGIN[3] + 110.0, ph + MARGIN[0] + MARGIN[2]);
        let mut out = header(w, h);
        let scale = self.values.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
            MARGIN[3] + pw / 2.0,
            esc(&self.title)
        );
        let top = MARGIN[0];
        out.push_str("<g shape-rendering=\"crispEdges\">\n");
        for j in 0..g.ny {
            for i in 0..g.nx {
                if let Some(v) = self.values[j * g.nx + i] {
                    let _ = writeln!(
                        out,
                        r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{}"/>"#,
                        MARGIN[3] + i as f64 * cell,
                        top + (g.ny - 1 - j) as f64 * cell,
                        diverging(v / scale)
                    );
                }
            }
        }
        out.push_str("</g>\n");
        // Cell centers sit at the grid points.
        let f = Frame {
            left: MARGIN[3],
            top,
            width: pw,
            height: ph,
            x: (g.x0 - 0.5 * (g.x1 - g.x0) / (g.nx.max(2) - 1) as f64, g.x1 + 0.5 * (g.x1 - g.x0) / (g.nx.max(2) - 1) as f64),
            y: (g.y0 - 0.5 * (g.y1 - g.y0) / (g.ny.max(2) - 1) as f64, g.y1 + 0.5 * (g.y1 - g.y0) / (g.ny.max(2) - 1) as f64),
        };
        f.axes(&mut out, "x", "y");

        let (bx, bh) = (MARGIN[3] + pw + 30.0, ph.min(240.0));
        let steps = 20;
        for s in 0..steps {
            let t = 1.0 - 2.0 * (s as f64 + 0.5) / steps as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{bx:.2}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
                top + s as f64 * bh / steps as f64,
                bh / steps as f64 + 0.5,
                diverging(t)
            );
        }
        for (t, y) in [(1.0, top), (0.0, top + bh / 2.0), (-1.0, top + bh)] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="11">{:.3e}</text>"#,
                bx + 20.0,
                y + 4.0,
                t * scale
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
