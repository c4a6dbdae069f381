//! Self-contained SVG line plots and histograms.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#111111"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn from_points<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for &(x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            (f.x0, f.x1, f.y0, f.y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if f.x1 - f.x0 < 1e-300 {
            f.x1 = f.x0 + 1.0;
        }
        if f.y1 - f.y0 < 1e-12 {
            f.y0 -= 0.5e-3;
            f.y1 += 0.5e-3;
        }
        let pad = 0.05 * (f.y1 - f.y0);
        f.y0 -= pad;
        f.y1 += pad;
        f
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (left, right) = (MARGIN_L, WIDTH - MARGIN_R);
    let (top, bottom) = (MARGIN_T, HEIGHT - MARGIN_B);
    let _ = writeln!(
        out,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" stroke="black" fill="none"/>"#
    );
    for k in 0..=4 {
        let fx = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let fy = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let (x, y) = (f.px(fx), f.py(fy));
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 18.0,
            tick(fx)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

/// Line plot; non-finite points break the line and are skipped.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let f = Frame::from_points(series.iter().flat_map(|s| s.points.iter()));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, f.px(x), f.py(y));
            pen_down = true;
        }
        if !d.is_empty() {
            let _ = writeln!(
                out,
                r#"<path d="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#,
                d.trim_end()
            );
        }
        let ly = MARGIN_T + 14.0 + 16.0 * k as f64;
        let lx = WIDTH - MARGIN_R - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over the range of the finite values.
    pub fn new(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0; bins];
        if finite.is_empty() {
            return Self {
                lo: 0.0,
                hi: 0.0,
                counts,
            };
        }
        let width = hi - lo;
        for v in finite {
            let k = if width > 0.0 {
                (((v - lo) / width) * bins as f64) as usize
            } else {
                0
            };
            counts[k.min(bins - 1)] += 1;
        }
        Self { lo, hi, counts }
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        (self.lo + w * k as f64, self.lo + w * (k + 1) as f64)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn histogram_plot(title: &str, xlabel: &str, h: &Histogram) -> String {
    let max = h.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let (x0, x1) = if h.hi > h.lo {
        (h.lo, h.hi)
    } else {
        (h.lo - 0.5, h.lo + 0.5)
    };
    let pts = [(x0, 0.0), (x1, max)];
    let f = Frame::from_points(pts.iter());
    let f = Frame { y0: 0.0, ..f };
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, "count");
    let w = (x1 - x0) / h.counts.len() as f64;
    for (k, &c) in h.counts.iter().enumerate() {
        let left = f.px(x0 + w * k as f64);
        let right = f.px(x0 + w * (k + 1) as f64);
        let top = f.py(c as f64);
        let _ = writeln!(
            out,
            r##"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#1f77b4" stroke="white"/>"##,
            (right - left).max(0.0),
            (f.py(0.0) - top).max(0.0)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_every_finite_value() {
        let v = [0.0, 0.1, 0.5, 0.99, 1.0, f64::INFINITY, f64::NAN];
        let h = Histogram::new(&v, 4);
        assert_eq!(h.total(), 5);
        assert_eq!(h.counts, vec![2, 0, 1, 2]);
        assert_eq!(h.edges(1), (0.25, 0.5));
        let flat = Histogram::new(&[2.0; 3], 5);
        assert_eq!(flat.counts[0], 3);
    }

    #[test]
    fn plots_are_well_formed() {
        let s = Series::new("a<b", vec![(0.0, 1.0), (1.0, f64::INFINITY), (2.0, 3.0)]);
        let svg = line_plot("t", "x", "y", &[s]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches(" M").count() + svg.matches("\"M").count(), 3);
        let svg = histogram_plot("h", "x", &Histogram::new(&[1.0, 2.0, 2.5], 3));
        assert_eq!(svg.matches("<rect").count(), 4);
    }
}
