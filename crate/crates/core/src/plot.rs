//! Self-contained SVG figures.
//!
//! Elements carry classes (`point`, `hist-bar`, `trace`, `restart`, `box`,
//! `criterion-dot`) so figures can be inspected or restyled.

use std::fmt::Write as _;

use crate::criteria::DistanceSummary;
use crate::psa::TraceRow;

const PANEL: f64 = 320.0;
const MARGIN: f64 = 48.0;
const HIST: f64 = 70.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Maps `[lo, hi]` onto `[a, b]`.
#[derive(Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, a, b }
    }

    fn at(&self, v: f64) -> f64 {
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="11">{}</text>"#,
            escape(s)
        );
    }

    fn frame(&mut self, x: f64, y: f64, w: f64, h: f64) {
        let _ = writeln!(
            self.body,
            r##"<rect class="frame" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#444"/>"##
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn scatter_panel(svg: &mut Svg, points: &[Vec<f64>], (i, j): (usize, usize), x0: f64, y0: f64) {
    svg.frame(x0, y0, PANEL, PANEL);
    let sx = Scale::new(-1.0, 1.0, x0 + 6.0, x0 + PANEL - 6.0);
    let sy = Scale::new(-1.0, 1.0, y0 + PANEL - 6.0, y0 + 6.0);
    for v in [-1.0, 0.0, 1.0] {
        svg.text(sx.at(v), y0 + PANEL + 14.0, "middle", &tick_label(v));
        svg.text(x0 - 4.0, sy.at(v) + 4.0, "end", &tick_label(v));
    }
    svg.text(x0 + PANEL / 2.0, y0 + PANEL + 30.0, "middle", &format!("x{}", i + 1));
    svg.text(x0 - 30.0, y0 + PANEL / 2.0, "middle", &format!("x{}", j + 1));
    for p in points {
        let _ = writeln!(
            svg.body,
            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
            sx.at(p[i]),
            sy.at(p[j]),
            PALETTE[0]
        );
    }
}

fn bins(values: impl Iterator<Item = f64>, count: usize) -> Vec<usize> {
    let mut out = vec![0; count];
    for v in values {
        let k = (((v + 1.0) / 2.0) * count as f64).floor() as isize;
        out[k.clamp(0, count as isize - 1) as usize] += 1;
    }
    out
}

/// Scatter plot of a design in real coordinates. Two-dimensional designs
/// get marginal histograms; higher dimensions get one panel per axis pair.
pub fn design_svg(points: &[Vec<f64>], title: &str, hist_bins: usize) -> String {
    let d = points.first().map_or(2, Vec::len);
    if d >= 3 {
        return pairwise_svg(points, title, d);
    }
    let pts: Vec<Vec<f64>> = if d == 1 {
        points.iter().map(|p| vec![p[0], 0.0]).collect()
    } else {
        points.to_vec()
    };
    let hist_bins = hist_bins.max(1);
    let x0 = MARGIN + 10.0;
    let y0 = MARGIN + HIST + 10.0;
    let mut svg = Svg::new(x0 + PANEL + HIST + 30.0, y0 + PANEL + MARGIN);
    svg.text(x0 + PANEL / 2.0, 20.0, "middle", title);
    scatter_panel(&mut svg, &pts, (0, 1), x0, y0);
    let axes = if d == 1 { 1 } else { 2 };
    for axis in 0..axes {
        let counts = bins(pts.iter().map(|p| p[axis]), hist_bins);
        let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let _ = writeln!(svg.body, r#"<g class="histogram" id="hist-x{}">"#, axis + 1);
        let step = (PANEL - 12.0) / hist_bins as f64;
        for (k, &c) in counts.iter().enumerate() {
            let len = c as f64 / top * (HIST - 6.0);
            let (x, y, w, h) = if axis == 0 {
                (x0 + 6.0 + k as f64 * step, y0 - 4.0 - len, step, len)
            } else {
                (x0 + PANEL + 4.0, y0 + PANEL - 6.0 - (k + 1) as f64 * step, len, step)
            };
            let _ = writeln!(
                svg.body,
                r##"<rect class="hist-bar" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="#9ecae1" stroke="#3182bd"/>"##
            );
        }
        svg.body.push_str("</g>\n");
    }
    svg.finish()
}

fn pairwise_svg(points: &[Vec<f64>], title: &str, d: usize) -> String {
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let cols = (pairs.len() as f64).sqrt().ceil() as usize;
    let rows = pairs.len().div_ceil(cols);
    let cell = PANEL + 2.0 * MARGIN;
    let mut svg = Svg::new(cols as f64 * cell, rows as f64 * cell + 30.0);
    svg.text(cols as f64 * cell / 2.0, 20.0, "middle", title);
    for (n, &pair) in pairs.iter().enumerate() {
        let x0 = (n % cols) as f64 * cell + MARGIN;
        let y0 = (n / cols) as f64 * cell + MARGIN + 10.0;
        let _ = writeln!(svg.body, r#"<g class="panel" id="panel-x{}-x{}">"#, pair.0 + 1, pair.1 + 1);
        scatter_panel(&mut svg, points, pair, x0, y0);
        svg.body.push_str("</g>\n");
    }
    svg.finish()
}

/// Best-value traces against elapsed time; restarts are drawn as diamonds.
pub fn trace_svg(traces: &[(String, Vec<TraceRow>)], title: &str) -> String {
    let all = traces.iter().flat_map(|(_, rows)| rows.iter());
    let finite: Vec<&TraceRow> = all.filter(|r| r.best_value.is_finite()).collect();
    let t_max = finite.iter().map(|r| r.elapsed).fold(0.0, f64::max);
    let v_min = finite.iter().map(|r| r.best_value).fold(f64::INFINITY, f64::min);
    let v_max = finite.iter().map(|r| r.best_value).fold(f64::NEG_INFINITY, f64::max);
    let (v_min, v_max) = if finite.is_empty() { (0.0, 1.0) } else { (v_min, v_max) };
    let w = 2.0 * PANEL;
    let mut svg = Svg::new(w + 2.0 * MARGIN + 120.0, PANEL + 2.0 * MARGIN + 20.0);
    let (x0, y0) = (MARGIN + 20.0, MARGIN);
    svg.text(x0 + w / 2.0, 20.0, "middle", title);
    svg.frame(x0, y0, w, PANEL);
    let sx = Scale::new(0.0, t_max, x0 + 4.0, x0 + w - 4.0);
    let sy = Scale::new(v_min, v_max, y0 + PANEL - 6.0, y0 + 6.0);
    for k in 0..=4 {
        let t = t_max * f64::from(k) / 4.0;
        svg.text(sx.at(t), y0 + PANEL + 14.0, "middle", &tick_label(t));
        let v = sy.lo + (sy.hi - sy.lo) * f64::from(k) / 4.0;
        svg.text(x0 - 4.0, sy.at(v) + 4.0, "end", &tick_label(v));
    }
    svg.text(x0 + w / 2.0, y0 + PANEL + 32.0, "middle", "elapsed (s)");
    for (n, (label, rows)) in traces.iter().enumerate() {
        let colour = PALETTE[n % PALETTE.len()];
        let path: Vec<String> = rows
            .iter()
            .filter(|r| r.best_value.is_finite())
            .map(|r| format!("{:.2},{:.2}", sx.at(r.elapsed), sy.at(r.best_value)))
            .collect();
        let _ = writeln!(
            svg.body,
            r#"<polyline class="trace" points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        for r in rows.iter().filter(|r| r.restart && r.best_value.is_finite()) {
            let (cx, cy) = (sx.at(r.elapsed), sy.at(r.best_value));
            let _ = writeln!(
                svg.body,
                r#"<polygon class="restart" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{colour}"/>"#,
                cx, cy - 5.0, cx + 5.0, cy, cx, cy + 5.0, cx - 5.0, cy
            );
        }
        let ly = y0 + 14.0 + 16.0 * n as f64;
        let _ = writeln!(
            svg.body,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/>"#,
            x0 + w + 10.0,
            x0 + w + 30.0
        );
        svg.text(x0 + w + 34.0, ly + 4.0, "start", label);
    }
    svg.finish()
}

pub struct BoxEntry {
    pub label: String,
    pub summary: DistanceSummary,
    /// Drawn as a dot in the strip beneath the boxes.
    pub criterion: Option<f64>,
}

/// Box plots of nearest-distance summaries with criterion values beneath.
pub fn box_svg(entries: &[BoxEntry], title: &str, criterion_label: &str) -> String {
    let n = entries.len().max(1);
    let w = (90.0 * n as f64).max(PANEL);
    let strip = 90.0;
    let mut svg = Svg::new(w + 2.0 * MARGIN + 20.0, PANEL + strip + 2.0 * MARGIN + 30.0);
    let (x0, y0) = (MARGIN + 20.0, MARGIN);
    svg.text(x0 + w / 2.0, 20.0, "middle", title);
    svg.frame(x0, y0, w, PANEL);
    let hi = entries.iter().map(|e| e.summary.max).fold(0.0, f64::max);
    let lo = entries.iter().map(|e| e.summary.min).fold(hi, f64::min);
    let sy = Scale::new(lo, hi, y0 + PANEL - 8.0, y0 + 8.0);
    for k in 0..=4 {
        let v = sy.lo + (sy.hi - sy.lo) * f64::from(k) / 4.0;
        svg.text(x0 - 4.0, sy.at(v) + 4.0, "end", &tick_label(v));
    }
    let slot = w / n as f64;
    for (k, e) in entries.iter().enumerate() {
        let cx = x0 + slot * (k as f64 + 0.5);
        let half = slot * 0.25;
        let s = &e.summary;
        let _ = writeln!(svg.body, r#"<g class="box">"#);
        let _ = writeln!(
            svg.body,
            r##"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="#333"/>"##,
            sy.at(s.min),
            sy.at(s.max)
        );
        let _ = writeln!(
            svg.body,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#c6dbef" stroke="#333"/>"##,
            cx - half,
            sy.at(s.upper_quartile),
            2.0 * half,
            (sy.at(s.lower_quartile) - sy.at(s.upper_quartile)).max(0.5)
        );
        let _ = writeln!(
            svg.body,
            r##"<line class="median" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000" stroke-width="2"/>"##,
            cx - half,
            sy.at(s.median),
            cx + half,
            sy.at(s.median)
        );
        svg.body.push_str("</g>\n");
        svg.text(cx, y0 + PANEL + 14.0, "middle", &e.label);
    }
    let strip_y = y0 + PANEL + 30.0;
    svg.frame(x0, strip_y, w, strip - 20.0);
    svg.text(x0 - 4.0, strip_y + (strip - 20.0) / 2.0 + 4.0, "end", criterion_label);
    let values: Vec<f64> = entries.iter().filter_map(|e| e.criterion).collect();
    let c_lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let c_hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sc = Scale::new(c_lo, c_hi, strip_y + strip - 28.0, strip_y + 8.0);
    for (k, e) in entries.iter().enumerate() {
        if let Some(v) = e.criterion {
            let cx = x0 + slot * (k as f64 + 0.5);
            let _ = writeln!(
                svg.body,
                r#"<circle class="criterion-dot" cx="{cx:.2}" cy="{:.2}" r="4" fill="black"/>"#,
                sc.at(v)
            );
            svg.text(cx + 8.0, sc.at(v) + 4.0, "start", &format!("{v:.4}"));
        }
    }
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(svg: &str, class: &str) -> usize {
        svg.matches(&format!("class=\"{class}\"")).count()
    }

    #[test]
    fn scatter_with_histograms() {
        let pts: Vec<Vec<f64>> = (0..21).map(|i| vec![-1.0 + 0.1 * f64::from(i), 0.0]).collect();
        let svg = design_svg(&pts, "design", 10);
        assert_eq!(count(&svg, "point"), 21);
        assert_eq!(count(&svg, "histogram"), 2);
        assert_eq!(count(&svg, "hist-bar"), 20);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn pairwise_panels() {
        let pts = vec![vec![0.0, 0.5, -0.5], vec![1.0, -1.0, 0.0]];
        let svg = design_svg(&pts, "3-d", 10);
        assert_eq!(count(&svg, "panel"), 3);
        assert_eq!(count(&svg, "point"), 6);
        let svg = design_svg(&[vec![0.0; 4]], "4-d", 10);
        assert_eq!(count(&svg, "panel"), 6);
    }

    #[test]
    fn restart_diamonds() {
        let rows = vec![
            TraceRow { elapsed: 0.0, best_value: 0.1, restart: false },
            TraceRow { elapsed: 0.05, best_value: 0.2, restart: true },
            TraceRow { elapsed: 0.1, best_value: 0.3, restart: false },
            TraceRow { elapsed: 0.15, best_value: 0.3, restart: true },
        ];
        let svg = trace_svg(&[("run 1".into(), rows)], "trace");
        assert_eq!(count(&svg, "trace"), 1);
        assert_eq!(count(&svg, "restart"), 2);
    }

    #[test]
    fn boxes_and_dots() {
        let summary = DistanceSummary {
            min: 0.1,
            lower_quartile: 0.2,
            median: 0.3,
            upper_quartile: 0.4,
            max: 0.6,
            distances: vec![],
        };
        let entries: Vec<BoxEntry> = (0..4)
            .map(|k| BoxEntry {
                label: format!("design {k}"),
                summary: summary.clone(),
                criterion: Some(0.8 + 0.05 * f64::from(k)),
            })
            .collect();
        let svg = box_svg(&entries, "distances", "D");
        assert_eq!(count(&svg, "box"), 4);
        assert_eq!(count(&svg, "criterion-dot"), 4);
    }

    #[test]
    fn labels_are_escaped() {
        let svg = design_svg(&[vec![0.0, 0.0]], "a < b & c", 4);
        assert!(svg.contains("a &lt; b &amp; c"));
    }
}
