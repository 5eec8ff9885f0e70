//! Minimal SVG scatter renderer: point sets, polygon outlines and labelled axes.

use std::fmt::Write;

use nalgebra::DVector;

use crate::drcvar::Polytope;

/// A named set of points drawn as small circles.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

/// A closed outline.
#[derive(Debug, Clone)]
pub struct Outline {
    pub label: String,
    pub color: String,
    pub vertices: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Scatter {
    pub title: String,
    pub width: f64,
    pub height: f64,
    pub series: Vec<Series>,
    pub outlines: Vec<Outline>,
}

/// Convex polygon `{x : a_j' x + b_j <= 0}` clipped to the box `[lo, hi]`,
/// vertices in counter-clockwise order. Empty if the intersection is empty.
pub fn clip_polytope(poly: &Polytope, lo: (f64, f64), hi: (f64, f64)) -> Vec<(f64, f64)> {
    let mut pts = vec![(lo.0, lo.1), (hi.0, lo.1), (hi.0, hi.1), (lo.0, hi.1)];
    for (a, b) in poly.directions().iter().zip(poly.offsets()) {
        if a.len() != 2 {
            return Vec::new();
        }
        let f = |p: (f64, f64)| a[0] * p.0 + a[1] * p.1 + b;
        let mut next = Vec::with_capacity(pts.len() + 1);
        for k in 0..pts.len() {
            let (p, q) = (pts[k], pts[(k + 1) % pts.len()]);
            let (fp, fq) = (f(p), f(q));
            if fp <= 0.0 {
                next.push(p);
            }
            if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
                let s = fp / (fp - fq);
                next.push((p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1)));
            }
        }
        pts = next;
        if pts.is_empty() {
            break;
        }
    }
    pts
}

/// Round tick positions covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

impl Scatter {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            width: 640.0,
            height: 480.0,
            series: Vec::new(),
            outlines: Vec::new(),
        }
    }

    /// Adds the first two coordinates of `points`.
    pub fn add_series(&mut self, label: &str, color: &str, points: &[DVector<f64>]) {
        let points = points
            .iter()
            .filter(|p| p.len() >= 2)
            .map(|p| (p[0], p[1]))
            .collect();
        self.series.push(Series {
            label: label.into(),
            color: color.into(),
            points,
        });
    }

    pub fn add_outline(&mut self, label: &str, color: &str, vertices: Vec<(f64, f64)>) {
        self.outlines.push(Outline {
            label: label.into(),
            color: color.into(),
            vertices,
        });
    }

    /// Bounding box of all finite points and vertices, padded by 5%.
    pub fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let all = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .chain(self.outlines.iter().flat_map(|o| o.vertices.iter()));
        let (mut lo, mut hi) = (
            (f64::INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for &(x, y) in all.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        if !lo.0.is_finite() {
            return ((-1.0, -1.0), (1.0, 1.0));
        }
        let pad = |l: f64, h: f64| {
            let d = ((h - l) * 0.05).max(1e-3);
            (l - d, h + d)
        };
        let (x0, x1) = pad(lo.0, hi.0);
        let (y0, y1) = pad(lo.1, hi.1);
        ((x0, y0), (x1, y1))
    }

    pub fn render(&self) -> String {
        let (margin_l, margin_r, margin_t, margin_b) = (60.0, 140.0, 30.0, 45.0);
        let (lo, hi) = self.bounds();
        let pw = self.width - margin_l - margin_r;
        let ph = self.height - margin_t - margin_b;
        let sx = |x: f64| margin_l + (x - lo.0) / (hi.0 - lo.0) * pw;
        let sy = |y: f64| margin_t + (hi.1 - y) / (hi.1 - lo.1) * ph;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
            margin_l + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{margin_l}" y="{margin_t}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        for x in ticks(lo.0, hi.0, 6) {
            let px = sx(x);
            let _ = writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
                margin_t + ph,
                margin_t + ph + 4.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                margin_t + ph + 16.0,
                tick_label(x)
            );
        }
        for y in ticks(lo.1, hi.1, 6) {
            let py = sy(y);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{margin_l}" y2="{py:.2}" stroke="black"/>"#,
                margin_l - 4.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                margin_l - 6.0,
                py + 4.0,
                tick_label(y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">x1</text>"#,
            margin_l + pw / 2.0,
            self.height - 8.0
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">x2</text>"#,
            margin_t + ph / 2.0,
            margin_t + ph / 2.0
        );
        let mut legend_y = margin_t + 10.0;
        let legend_x = margin_l + pw + 12.0;
        for s in &self.series {
            let _ = writeln!(
                out,
                r#"<g fill="{}" fill-opacity="0.55">"#,
                escape(&s.color)
            );
            for &(x, y) in s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
            {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="1.8"/>"#,
                    sx(x),
                    sy(y)
                );
            }
            let _ = writeln!(out, "</g>");
            let _ = writeln!(
                out,
                r#"<circle cx="{legend_x:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
                legend_y - 4.0,
                escape(&s.color)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{legend_y:.2}">{}</text>"#,
                legend_x + 10.0,
                escape(&s.label)
            );
            legend_y += 16.0;
        }
        for o in &self.outlines {
            if o.vertices.len() >= 2 {
                let pts: Vec<String> = o
                    .vertices
                    .iter()
                    .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polygon points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    pts.join(" "),
                    escape(&o.color)
                );
            }
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5"/>"#,
                legend_x - 5.0,
                legend_y - 4.0,
                legend_x + 5.0,
                legend_y - 4.0,
                escape(&o.color)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{legend_y:.2}">{}</text>"#,
                legend_x + 10.0,
                escape(&o.label)
            );
            legend_y += 16.0;
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Fixed colour cycle for numbered outlines.
pub const PALETTE: [&str; 6] = [
    "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b",
];
