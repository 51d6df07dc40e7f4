//! Minimal static SVG charts: lines with optional error bars, shaded bands,
//! scatter points and heatmap panels. Output contains no timestamps, so
//! identical inputs give identical files.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone)]
pub enum Layer {
    Line { label: String, xs: Vec<f64>, ys: Vec<f64>, errors: Option<Vec<f64>>, color: String },
    Band { label: String, xs: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>, color: String },
    Scatter { label: String, xs: Vec<f64>, ys: Vec<f64>, color: String },
}

impl Layer {
    fn label(&self) -> &str {
        match self {
            Layer::Line { label, .. } | Layer::Band { label, .. } | Layer::Scatter { label, .. } => label,
        }
    }

    fn color(&self) -> &str {
        match self {
            Layer::Line { color, .. } | Layer::Band { color, .. } | Layer::Scatter { color, .. } => color,
        }
    }

    fn extent(&self) -> ((f64, f64), (f64, f64)) {
        let (xs, ys): (&[f64], Vec<f64>) = match self {
            Layer::Line { xs, ys, errors, .. } => {
                let mut all = ys.clone();
                if let Some(e) = errors {
                    all.extend(ys.iter().zip(e).flat_map(|(y, e)| [y - e, y + e]));
                }
                (xs, all)
            }
            Layer::Band { xs, lower, upper, .. } => (xs, lower.iter().chain(upper).copied().collect()),
            Layer::Scatter { xs, ys, .. } => (xs, ys.clone()),
        };
        (min_max(xs), min_max(&ys))
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round tick step (1, 2 or 5 times a power of ten) giving about `target` ticks.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn padded((lo, hi): (f64, f64)) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Renders an x-y chart with a legend on the right.
pub fn chart(title: &str, x_label: &str, y_label: &str, layers: &[Layer]) -> String {
    let (mut xr, mut yr) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
    for l in layers {
        let (x, y) = l.extent();
        xr = (xr.0.min(x.0), xr.1.max(x.1));
        yr = (yr.0.min(y.0), yr.1.max(y.1));
    }
    let xr = padded(xr);
    let yr = padded(yr);
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - xr.0) / (xr.1 - xr.0) * pw;
    let sy = |y: f64| MARGIN_TOP + ph - (y - yr.0) / (yr.1 - yr.0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    axes(&mut s, xr, yr, &sx, &sy, pw, ph);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        escape(y_label)
    );

    for l in layers {
        match l {
            Layer::Band { xs, lower, upper, color, .. } => {
                let mut pts: Vec<String> =
                    xs.iter().zip(upper).map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                pts.extend(xs.iter().zip(lower).rev().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))));
                let _ = writeln!(
                    s,
                    r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                    pts.join(" ")
                );
            }
            Layer::Line { xs, ys, errors, color, .. } => {
                let pts: Vec<String> = xs.iter().zip(ys).map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
                    pts.join(" ")
                );
                if let Some(e) = errors {
                    for ((x, y), e) in xs.iter().zip(ys).zip(e) {
                        let _ = writeln!(
                            s,
                            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}" stroke-width="1"/>"#,
                            sx(*x),
                            sy(y - e),
                            sy(y + e)
                        );
                    }
                }
            }
            Layer::Scatter { xs, ys, color, .. } => {
                for (x, y) in xs.iter().zip(ys) {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}" fill-opacity="0.7"/>"#,
                        sx(*x),
                        sy(*y)
                    );
                }
            }
        }
    }

    for (i, l) in layers.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let x = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(s, r#"<rect x="{x}" y="{}" width="14" height="10" fill="{}"/>"#, y - 9.0, l.color());
        let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, x + 20.0, escape(l.label()));
    }
    s.push_str("</svg>\n");
    s
}

fn axes(
    s: &mut String,
    xr: (f64, f64),
    yr: (f64, f64),
    sx: &dyn Fn(f64) -> f64,
    sy: &dyn Fn(f64) -> f64,
    pw: f64,
    ph: f64,
) {
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let xstep = tick_step(xr.1 - xr.0, 6.0);
    let mut t = (xr.0 / xstep).ceil() * xstep;
    while t <= xr.1 {
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{0}" x2="{x:.2}" y2="{1}" stroke="black"/>"#,
            MARGIN_TOP + ph,
            MARGIN_TOP + ph + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + ph + 18.0,
            tick_label(t, xstep)
        );
        t += xstep;
    }
    let ystep = tick_step(yr.1 - yr.0, 6.0);
    let mut t = (yr.0 / ystep).ceil() * ystep;
    while t <= yr.1 {
        let y = sy(t);
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="black"/>"#,
            MARGIN_LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            tick_label(t, ystep)
        );
        t += ystep;
    }
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}

/// A rectangular grid of values, row-major with `x` varying fastest.
#[derive(Debug, Clone)]
pub struct Heatmap {
    pub title: String,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

/// Side-by-side heatmaps sharing the input box `[x0, x1] × [y0, y1]`; each
/// panel has its own colour scale (dark = low).
pub fn heatmap_panels(title: &str, panels: &[Heatmap], x_range: (f64, f64), y_range: (f64, f64)) -> String {
    let size = 260.0;
    let gap = 40.0;
    let width = gap + panels.len() as f64 * (size + gap);
    let height = size + 110.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, width / 2.0, escape(title));
    for (p, panel) in panels.iter().enumerate() {
        let left = gap + p as f64 * (size + gap);
        let top = 55.0;
        let (lo, hi) = min_max(&panel.values);
        let cw = size / panel.nx as f64;
        let ch = size / panel.ny as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            left + size / 2.0,
            top - 8.0,
            escape(&panel.title)
        );
        for j in 0..panel.ny {
            for i in 0..panel.nx {
                let v = panel.values[j * panel.nx + i];
                let u = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    left + i as f64 * cw,
                    top + size - (j + 1) as f64 * ch,
                    cw + 0.3,
                    ch + 0.3,
                    colour(u)
                );
            }
        }
        let _ =
            writeln!(s, r#"<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="black"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{left}" y="{}">{} .. {}</text>"#,
            top + size + 16.0,
            tick_label(x_range.0, 1.0),
            tick_label(x_range.1, 1.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{left}" y="{}">y {} .. {}; range {:.3} .. {:.3}</text>"#,
            top + size + 32.0,
            tick_label(y_range.0, 1.0),
            tick_label(y_range.1, 1.0),
            lo,
            hi
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Dark blue through teal to yellow.
fn colour(u: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let stops = [(0.0, [68.0, 1.0, 84.0]), (0.5, [33.0, 145.0, 140.0]), (1.0, [253.0, 231.0, 37.0])];
    let (a, b) = if u <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let t = (u - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|k| (a.1[k] + t * (b.1[k] - a.1[k])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}
