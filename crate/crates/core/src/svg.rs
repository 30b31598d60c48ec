//! Minimal self-contained SVG charts. Output depends only on the input
//! data, so reruns produce identical files.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
/// Longest series drawn point by point; longer traces are strided.
const MAX_LINE_POINTS: usize = 2000;

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10()).ceil() as usize };
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Roughly `target` round-numbered ticks covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, f64) {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), step)
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Plot area with a linear data-to-pixel mapping.
struct Frame {
    out: String,
    x: (f64, f64),
    y: (f64, f64),
    width: f64,
    height: f64,
}

impl Frame {
    fn new(title: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        Self::sized(title, x, y, WIDTH, HEIGHT)
    }

    fn sized(title: &str, x: (f64, f64), y: (f64, f64), width: f64, height: f64) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = width,
            h = height
        );
        let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            num(width / 2.0),
            esc(title)
        );
        Self {
            out,
            x,
            y,
            width,
            height,
        }
    }

    fn px(&self, x: f64) -> f64 {
        let w = self.width - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = self.height - MARGIN_TOP - MARGIN_BOTTOM;
        self.height - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * h
    }

    fn bottom(&self) -> f64 {
        self.height - MARGIN_BOTTOM
    }

    fn right(&self) -> f64 {
        self.width - MARGIN_RIGHT
    }

    fn axes(&mut self, xlabel: &str, ylabel: &str, x_ticks: bool) {
        let (b, r) = (self.bottom(), self.right());
        let _ = writeln!(
            self.out,
            r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
            num(r - MARGIN_LEFT),
            num(b - MARGIN_TOP)
        );
        if x_ticks {
            let (xt, step) = ticks(self.x.0, self.x.1, 6);
            for t in xt {
                let x = num(self.px(t));
                let _ = writeln!(
                    self.out,
                    r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#333"/><text x="{x}" y="{}" text-anchor="middle">{}</text>"##,
                    num(b),
                    num(b + 5.0),
                    num(b + 18.0),
                    tick_label(t, step)
                );
            }
        }
        let (yt, step) = ticks(self.y.0, self.y.1, 6);
        for t in yt {
            let y = num(self.py(t));
            let _ = writeln!(
                self.out,
                r##"<line x1="{}" y1="{y}" x2="{MARGIN_LEFT}" y2="{y}" stroke="#333"/><text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{}</text>"##,
                num(MARGIN_LEFT - 5.0),
                num(MARGIN_LEFT - 8.0),
                tick_label(t, step)
            );
        }
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num((MARGIN_LEFT + r) / 2.0),
            num(self.height - 12.0),
            esc(xlabel)
        );
        let _ = writeln!(
            self.out,
            r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
            esc(ylabel),
            y = num((MARGIN_TOP + b) / 2.0)
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        let _ = writeln!(
            self.out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" {style}/>"#,
            num(self.px(x1)),
            num(self.py(y1)),
            num(self.px(x2)),
            num(self.py(y2))
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], color: &str) {
        let stride = points.len().div_ceil(MAX_LINE_POINTS).max(1);
        let mut path = String::new();
        for (k, &(x, y)) in points.iter().enumerate().filter(|(k, _)| k % stride == 0) {
            if k > 0 {
                path.push(' ');
            }
            let _ = write!(path, "{},{}", num(self.px(x)), num(self.py(y)));
        }
        let _ = writeln!(
            self.out,
            r#"<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.2"/>"#
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, color: &str) {
        let _ = writeln!(
            self.out,
            r#"<circle cx="{}" cy="{}" r="{r}" fill="{color}" fill-opacity="0.7"/>"#,
            num(self.px(x)),
            num(self.py(y))
        );
    }

    fn note(&mut self, text: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(self.right() - 8.0),
            num(MARGIN_TOP + 18.0),
            esc(text)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

pub fn histogram(title: &str, xlabel: &str, values: &[f64], bins: usize) -> String {
    let values: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let bins = bins.max(1);
    let (lo, hi) = extent(values.iter().copied());
    let (lo, hi) = if values.is_empty() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in &values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut f = Frame::new(title, (lo, hi), (0.0, top * 1.05));
    for (k, &c) in counts.iter().enumerate() {
        let (x0, x1) = (f.px(lo + k as f64 * width), f.px(lo + (k + 1) as f64 * width));
        let (y0, y1) = (f.py(c as f64), f.py(0.0));
        let _ = writeln!(
            f.out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="{}" stroke="#fff"/>"##,
            num(x0),
            num(y0),
            num(x1 - x0),
            num(y1 - y0),
            PALETTE[0]
        );
    }
    f.axes(xlabel, "count", true);
    f.note(&format!("n = {}", values.len()));
    f.finish()
}

/// One box (quartiles, median, 1.5 IQR whiskers, outlier points) per group.
pub fn boxplot(title: &str, ylabel: &str, groups: &[(String, Vec<f64>)]) -> String {
    let (lo, hi) = padded_extent(groups.iter().flat_map(|(_, v)| v.iter().copied()));
    let k = groups.len().max(1) as f64;
    let mut f = Frame::new(title, (0.0, k), (lo, hi));
    for (g, (label, values)) in groups.iter().enumerate() {
        let center = g as f64 + 0.5;
        let cx = num(f.px(center));
        let _ = writeln!(
            f.out,
            r#"<text x="{cx}" y="{}" text-anchor="end" transform="rotate(-35 {cx} {})">{}</text>"#,
            num(f.bottom() + 14.0),
            num(f.bottom() + 14.0),
            esc(label)
        );
        if values.is_empty() {
            continue;
        }
        let s = crate::stats::sorted(values);
        let q = |p| crate::stats::quantile_sorted(&s, p);
        let (q1, med, q3) = (q(0.25), q(0.5), q(0.75));
        let iqr = q3 - q1;
        let lo_w = s.iter().copied().find(|&v| v >= q1 - 1.5 * iqr).unwrap_or(q1);
        let hi_w = s.iter().rev().copied().find(|&v| v <= q3 + 1.5 * iqr).unwrap_or(q3);
        let half = 0.3;
        let color = PALETTE[g % PALETTE.len()];
        let _ = writeln!(
            f.out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="{color}" fill-opacity="0.35" stroke="#333"/>"##,
            num(f.px(center - half)),
            num(f.py(q3)),
            num(f.px(center + half) - f.px(center - half)),
            num(f.py(q1) - f.py(q3))
        );
        f.line(center - half, med, center + half, med, r##"stroke="#000" stroke-width="2""##);
        f.line(center, q3, center, hi_w, r##"stroke="#333""##);
        f.line(center, q1, center, lo_w, r##"stroke="#333""##);
        for &v in s.iter().filter(|&&v| v < lo_w || v > hi_w) {
            f.circle(center, v, 2.5, "#333");
        }
    }
    f.axes("", ylabel, false);
    f.finish()
}

fn padded_extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = extent(values);
    padded(lo, hi)
}

/// Horizontal intervals with point estimates, drawn in the given order.
pub fn caterpillar(title: &str, xlabel: &str, rows: &[(String, f64, f64, f64)]) -> String {
    let (lo, hi) = padded_extent(rows.iter().flat_map(|r| [r.1, r.2, r.3]));
    let height = (MARGIN_TOP + MARGIN_BOTTOM + 9.0 * rows.len() as f64).max(HEIGHT);
    let mut f = Frame::sized(title, (lo, hi), (0.0, rows.len().max(1) as f64), WIDTH + 80.0, height);
    if lo < 0.0 && hi > 0.0 {
        f.line(0.0, 0.0, 0.0, rows.len() as f64, r##"stroke="#999" stroke-dasharray="4 3""##);
    }
    for (k, (label, mean, low, high)) in rows.iter().enumerate() {
        let y = rows.len() as f64 - k as f64 - 0.5;
        f.line(*low, y, *high, y, &format!(r#"stroke="{}""#, PALETTE[0]));
        f.circle(*mean, y, 2.5, PALETTE[1]);
        if rows.len() <= 60 {
            let _ = writeln!(
                f.out,
                r#"<text x="{}" y="{}" text-anchor="end" dominant-baseline="middle" font-size="9">{}</text>"#,
                num(MARGIN_LEFT - 4.0),
                num(f.py(y)),
                esc(label)
            );
        }
    }
    // row labels replace numeric y ticks
    let (b, r) = (f.bottom(), f.right());
    let _ = writeln!(
        f.out,
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        num(r - MARGIN_LEFT),
        num(b - MARGIN_TOP)
    );
    let (xt, step) = ticks(lo, hi, 6);
    for t in xt {
        let x = num(f.px(t));
        let _ = writeln!(
            f.out,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            num(b + 18.0),
            tick_label(t, step)
        );
    }
    let _ = writeln!(
        f.out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num((MARGIN_LEFT + r) / 2.0),
        num(f.height - 12.0),
        esc(xlabel)
    );
    f.finish()
}

pub fn scatter(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)], note: &str) -> String {
    let (lo, hi) = padded_extent(points.iter().flat_map(|p| [p.0, p.1]));
    let mut f = Frame::new(title, (lo, hi), (lo, hi));
    f.line(lo, lo, hi, hi, r##"stroke="#999" stroke-dasharray="4 3""##);
    for &(x, y) in points {
        f.circle(x, y, 3.0, PALETTE[0]);
    }
    f.axes(xlabel, ylabel, true);
    f.note(note);
    f.finish()
}

/// One polyline per series against the draw index.
pub fn traces(title: &str, ylabel: &str, series: &[Vec<f64>]) -> String {
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    let (lo, hi) = padded_extent(series.iter().flatten().copied());
    let mut f = Frame::new(title, (0.0, len.max(2) as f64 - 1.0), (lo, hi));
    for (c, s) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s.iter().enumerate().map(|(k, &v)| (k as f64, v)).collect();
        f.polyline(&pts, PALETTE[c % PALETTE.len()]);
    }
    f.axes("retained draw", ylabel, true);
    f.finish()
}

pub fn roc(points: &[(f64, f64)], auc: f64) -> String {
    let mut f = Frame::new("ROC curve", (0.0, 1.0), (0.0, 1.0));
    f.line(0.0, 0.0, 1.0, 1.0, r##"stroke="#999" stroke-dasharray="4 3""##);
    f.polyline(points, PALETTE[0]);
    f.axes("false positive rate", "true positive rate", true);
    f.note(&format!("AUC = {auc:.4}"));
    f.finish()
}

/// Stem plot with a dashed horizontal threshold.
pub fn stems(title: &str, ylabel: &str, values: &[f64], threshold: f64) -> String {
    let top = values.iter().copied().fold(threshold, f64::max) * 1.08;
    let mut f = Frame::new(title, (0.0, values.len().max(1) as f64 + 1.0), (0.0, top.max(1e-9)));
    for (k, &v) in values.iter().enumerate() {
        let x = k as f64 + 1.0;
        let color = if v > threshold { PALETTE[1] } else { PALETTE[0] };
        f.line(x, 0.0, x, v, &format!(r#"stroke="{color}""#));
    }
    let n = values.len() as f64 + 1.0;
    f.line(0.0, threshold, n, threshold, r##"stroke="#d62728" stroke-dasharray="6 4""##);
    f.axes("observation", ylabel, true);
    f.note(&format!("threshold = {threshold:.4}"));
    f.finish()
}

/// Four charts in a 2 x 2 grid.
pub fn panel(title: &str, charts: [String; 4]) -> String {
    let (w, h) = (2.0 * WIDTH, 2.0 * HEIGHT + 30.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="17">{}</text>"#,
        num(w / 2.0),
        esc(title)
    );
    for (k, chart) in charts.iter().enumerate() {
        let (x, y) = ((k % 2) as f64 * WIDTH, 30.0 + (k / 2) as f64 * HEIGHT);
        let inner = chart.replacen("<svg ", &format!(r#"<svg x="{x}" y="{y}" "#), 1);
        out.push_str(&inner);
    }
    out.push_str("</svg>\n");
    out
}
