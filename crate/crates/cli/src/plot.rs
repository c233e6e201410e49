//! Static SVG 1.1 plots with a fixed 800×600 viewport.
//!
//! Output depends only on the data: ticks come from the classic "nice
//! number" rule and every coordinate is printed with two decimals.

use std::fmt::Write;

use schwarz_coupler::geometry::Component;
use schwarz_coupler::schwarz::{DiscreteField, IterationHistory};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;

const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 56.0;
const MARGIN_BOTTOM: f64 = 56.0;

const LOCAL_COLOR: &str = "#1f77b4";
const NONLOCAL_COLOR: &str = "#d62728";

/// A set of polylines drawn with one style.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: Option<String>,
    pub polylines: Vec<Vec<(f64, f64)>>,
    pub color: &'static str,
    pub dash: Option<&'static str>,
    pub width: f64,
    pub opacity: f64,
    /// Draw a dot at every vertex.
    pub dots: bool,
}

impl Series {
    pub fn new(polylines: Vec<Vec<(f64, f64)>>, color: &'static str) -> Self {
        Self {
            label: None,
            polylines,
            color,
            dash: None,
            width: 2.0,
            opacity: 1.0,
            dots: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Dashed vertical lines, e.g. at subdomain interfaces.
    pub markers: Vec<f64>,
}

fn nice_num(x: f64, round: bool) -> f64 {
    let e = x.log10().floor();
    let f = x / 10f64.powf(e);
    let nf = if round {
        match f {
            f if f < 1.5 => 1.0,
            f if f < 3.0 => 2.0,
            f if f < 7.0 => 5.0,
            _ => 10.0,
        }
    } else {
        match f {
            f if f <= 1.0 => 1.0,
            f if f <= 2.0 => 2.0,
            f if f <= 5.0 => 5.0,
            _ => 10.0,
        }
    };
    nf * 10f64.powf(e)
}

/// Axis bounds widened to multiples of a nice step, and the ticks between
/// them. A degenerate range is widened around its value first.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> (f64, f64, Vec<f64>) {
    let (mut lo, mut hi) = (lo, hi);
    if hi - lo <= 1e-12 * lo.abs().max(hi.abs()) {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        lo -= pad;
        hi += pad;
    }
    let range = nice_num(hi - lo, false);
    let step = nice_num(range / (target.max(2) - 1) as f64, true);
    let (a, b) = ((lo / step).floor(), (hi / step).ceil());
    let ticks = (a as i64..=b as i64).map(|k| k as f64 * step).collect();
    (a * step, b * step, ticks)
}

fn tick_label(t: f64, step: f64) -> String {
    if t == 0.0 {
        return "0".into();
    }
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    if decimals > 4 || t.abs() >= 1e5 {
        format!("{t:.1e}")
    } else {
        format!("{t:.decimals$}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    left: f64,
    top: f64,
    w: f64,
    h: f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_y: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        let y = if self.log_y { y.log10() } else { y };
        self.top + self.h - (y - self.y0) / (self.y1 - self.y0) * self.h
    }
}

/// Splits polylines at points that cannot be drawn (non-finite, or
/// non-positive on a log axis).
fn drawable(lines: &[Vec<(f64, f64)>], log_y: bool) -> Vec<Vec<(f64, f64)>> {
    let ok = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!log_y || y > 0.0);
    let mut out = Vec::new();
    for line in lines {
        let mut cur = Vec::new();
        for p in line {
            if ok(p) {
                cur.push(*p);
            } else if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

fn draw_panel(svg: &mut String, panel: &Panel, left: f64, width: f64) {
    let lines: Vec<Vec<Vec<(f64, f64)>>> = panel
        .series
        .iter()
        .map(|s| drawable(&s.polylines, panel.log_y))
        .collect();
    let pts = || lines.iter().flatten().flatten();
    let (mut xlo, mut xhi) = pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.0), b.max(p.0))
    });
    let (mut ylo, mut yhi) = pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.1), b.max(p.1))
    });
    for &m in &panel.markers {
        xlo = xlo.min(m);
        xhi = xhi.max(m);
    }
    if !xlo.is_finite() {
        (xlo, xhi) = (0.0, 1.0);
    }
    if !ylo.is_finite() {
        (ylo, yhi) = if panel.log_y { (1e-16, 1.0) } else { (0.0, 1.0) };
    }

    let (x0, x1, xticks) = nice_ticks(xlo, xhi, 7);
    let xstep = xticks.get(1).map_or(1.0, |t| t - xticks[0]);
    let (y0, y1, yticks, ylabels): (f64, f64, Vec<f64>, Vec<String>) = if panel.log_y {
        let a = ylo.log10().floor();
        let mut b = yhi.log10().ceil();
        if b <= a {
            b = a + 1.0;
        }
        let stride = ((b - a) / 8.0).ceil().max(1.0);
        let ticks: Vec<f64> = (0..)
            .map(|k| a + k as f64 * stride)
            .take_while(|&t| t <= b)
            .collect();
        let labels = ticks.iter().map(|t| format!("1e{}", *t as i64)).collect();
        (a, b, ticks, labels)
    } else {
        let (y0, y1, ticks) = nice_ticks(ylo, yhi, 6);
        let step = ticks.get(1).map_or(1.0, |t| t - ticks[0]);
        let labels = ticks.iter().map(|&t| tick_label(t, step)).collect();
        (y0, y1, ticks, labels)
    };

    let f = Frame {
        left: left + MARGIN_LEFT,
        top: MARGIN_TOP,
        w: width - MARGIN_LEFT - MARGIN_RIGHT,
        h: HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
        x0,
        x1,
        y0,
        y1,
        log_y: panel.log_y,
    };
    let bottom = f.top + f.h;
    let py_axis = |t: f64| f.top + f.h - (t - f.y0) / (f.y1 - f.y0) * f.h;

    // grid and ticks
    for &t in &xticks {
        let x = f.px(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="#e5e5e5"/>"##,
            f.top
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 18.0,
            tick_label(t, xstep)
        );
    }
    for (t, label) in yticks.iter().zip(&ylabels) {
        let y = py_axis(*t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/>"##,
            f.left,
            f.left + f.w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            f.left - 6.0,
            y + 4.0,
            escape(label)
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        f.left, f.top, f.w, f.h
    );
    for &m in &panel.markers {
        let x = f.px(m);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="#555555" stroke-dasharray="6 4"/>"##,
            f.top
        );
    }

    // data
    for (s, polys) in panel.series.iter().zip(&lines) {
        let dash = s
            .dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        for poly in polys {
            let points: Vec<String> = poly
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{:.2}" stroke-opacity="{:.2}"{dash}/>"#,
                points.join(" "),
                s.color,
                s.width,
                s.opacity
            );
            if s.dots {
                for &(x, y) in poly {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.50" fill="{}"/>"#,
                        f.px(x),
                        f.py(y),
                        s.color
                    );
                }
            }
        }
    }

    // labels and legend
    let cx = f.left + f.w / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle" font-size="15">{}</text>"#,
        f.top - 12.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        bottom + 42.0,
        escape(&panel.x_label)
    );
    let ly = f.top + f.h / 2.0;
    let lx = left + 18.0;
    let _ = writeln!(
        svg,
        r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
        escape(&panel.y_label)
    );
    let mut row = 0.0;
    for s in &panel.series {
        let Some(label) = &s.label else { continue };
        let y = f.top + 16.0 + 18.0 * row;
        let x = f.left + f.w - 150.0;
        let dash = s
            .dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="{:.2}" stroke-opacity="{:.2}"{dash}/>"#,
            x + 26.0,
            s.color,
            s.width,
            s.opacity
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 32.0,
            y + 4.0,
            escape(label)
        );
        row += 1.0;
    }
}

/// Panels laid out side by side in one document.
pub fn render(panels: &[Panel]) -> String {
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let w = WIDTH / panels.len().max(1) as f64;
    for (k, panel) in panels.iter().enumerate() {
        draw_panel(&mut svg, panel, k as f64 * w, w);
    }
    svg.push_str("</svg>\n");
    svg
}

/// One polyline per subdomain, through the element end values (steps for
/// piecewise constants).
pub fn field_polylines(field: &DiscreteField) -> Vec<Vec<(f64, f64)>> {
    let space = field.space();
    let c = field.coeffs();
    let mut out: Vec<Vec<(f64, f64)>> = vec![Vec::new(); space.num_subdomains()];
    for (e, el) in space.elements().iter().enumerate() {
        let d = space.element_dofs(e);
        let (va, vb) = if d.len() == 2 {
            (c[d[0]], c[d[1]])
        } else {
            (c[d[0]], c[d[0]])
        };
        let line = &mut out[el.subdomain];
        if line.last() != Some(&(el.a, va)) {
            line.push((el.a, va));
        }
        line.push((el.b, vb));
    }
    out.retain(|l| !l.is_empty());
    out
}

fn component_style(field: &DiscreteField) -> (&'static str, &'static str) {
    match field.space().component() {
        Component::Local => (LOCAL_COLOR, "local u"),
        Component::Nonlocal => (NONLOCAL_COLOR, "nonlocal v"),
    }
}

/// Limit solution, plus a second panel with the leading iterates overlaid
/// on the limit when `iterates` is not empty.
pub fn solution_svg(limit: &[&DiscreteField], iterates: &[Vec<DiscreteField>], markers: &[f64]) -> String {
    let limit_series = |labelled: bool| -> Vec<Series> {
        limit
            .iter()
            .filter(|f| f.space().num_dofs() > 0)
            .map(|f| {
                let (color, label) = component_style(f);
                let mut s = Series::new(field_polylines(f), color);
                s.label = labelled.then(|| label.to_string());
                s
            })
            .collect()
    };
    let mut panels = vec![Panel {
        title: "Limit solution".into(),
        x_label: "x".into(),
        y_label: "value".into(),
        series: limit_series(true),
        markers: markers.to_vec(),
        ..Default::default()
    }];
    if !iterates.is_empty() {
        let n = iterates.len();
        let mut series = Vec::new();
        for (k, fields) in iterates.iter().enumerate() {
            for f in fields.iter().filter(|f| f.space().num_dofs() > 0) {
                let (color, _) = component_style(f);
                let mut s = Series::new(field_polylines(f), color);
                s.dash = Some("5 4");
                s.width = 1.5;
                s.opacity = 0.3 + 0.5 * (k + 1) as f64 / n as f64;
                series.push(s);
            }
        }
        series.extend(limit_series(false));
        panels.push(Panel {
            title: format!("Iterates 1-{n} and limit"),
            x_label: "x".into(),
            y_label: "value".into(),
            series,
            markers: markers.to_vec(),
            ..Default::default()
        });
    }
    render(&panels)
}

/// Semilog convergence history, one panel per run. Plots `err_H` when a
/// reference was computed and the step difference otherwise.
pub fn convergence_svg(runs: &[(&str, &IterationHistory)]) -> String {
    let panels: Vec<Panel> = runs
        .iter()
        .map(|(name, h)| {
            let has_err = h.records.iter().any(|r| r.err_h.is_some());
            let points: Vec<(f64, f64)> = h
                .records
                .iter()
                .map(|r| {
                    let y = if has_err { r.err_h.unwrap_or(f64::NAN) } else { r.step_diff_h };
                    (r.n as f64, y)
                })
                .collect();
            let mut s = Series::new(vec![points], "#2c2c2c");
            s.dots = true;
            s.width = 1.5;
            Panel {
                title: name.to_string(),
                x_label: "iteration".into(),
                y_label: if has_err { "H-norm error" } else { "H-norm step difference" }.into(),
                log_y: true,
                series: vec![s],
                ..Default::default()
            }
        })
        .collect();
    render(&panels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_ticks_cover_the_range() {
        let (a, b, t) = nice_ticks(-1.0, 1.0, 7);
        assert_eq!((a, b), (-1.0, 1.0));
        assert!(t.len() >= 5 && t.len() <= 11);
        let (a, b, t) = nice_ticks(0.013, 0.87, 6);
        assert!(a <= 0.013 && b >= 0.87);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        let (a, b, _) = nice_ticks(0.0, 0.0, 6);
        assert!(a < 0.0 && b > 0.0);
    }

    #[test]
    fn tick_labels_drop_spurious_digits() {
        assert_eq!(tick_label(0.30000000000000004, 0.1), "0.3");
        assert_eq!(tick_label(-0.0, 0.5), "0");
        assert_eq!(tick_label(20.0, 5.0), "20");
    }

    #[test]
    fn log_axis_skips_nonpositive_points() {
        let lines = vec![vec![(1.0, 1e-3), (2.0, 0.0), (3.0, 1e-5), (4.0, 1e-6)]];
        let d = drawable(&lines, true);
        assert_eq!(d, vec![vec![(1.0, 1e-3)], vec![(3.0, 1e-5), (4.0, 1e-6)]]);
    }

    #[test]
    fn geometric_history_is_a_straight_line() {
        let pts: Vec<(f64, f64)> = (1..=8).map(|n| (n as f64, 0.1f64.powi(n))).collect();
        let f = Frame {
            left: 0.0,
            top: 0.0,
            w: 100.0,
            h: 100.0,
            x0: 0.0,
            x1: 10.0,
            y0: -9.0,
            y1: 0.0,
            log_y: true,
        };
        let ys: Vec<f64> = pts.iter().map(|&(_, y)| f.py(y)).collect();
        let d0 = ys[1] - ys[0];
        assert!(ys.windows(2).all(|w| ((w[1] - w[0]) - d0).abs() < 1e-9));
    }

    #[test]
    fn render_is_a_fixed_size_document() {
        let mut s = Series::new(vec![vec![(0.0, 0.0), (1.0, 0.0)]], LOCAL_COLOR);
        s.label = Some("a < b".into());
        let svg = render(&[Panel {
            series: vec![s],
            ..Default::default()
        }]);
        assert!(svg.contains(r#"width="800" height="600""#));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
