//! Three orthographic views (XY, XZ, YZ) of target points, ground truth and
//! predicted trajectories, written as a standalone SVG.

use std::fmt::Write as _;
use std::path::Path;

use uavtrace_core::Trajectory;

use crate::error::{CliError, Result};
use crate::eval::load_trajectory;
use crate::write_file;

const PANEL: f64 = 360.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 70.0;
const MARGIN_BOTTOM: f64 = 50.0;

const POINTS_COLOR: &str = "#7f7f7f";
const GT_COLOR: &str = "#2ca02c";
const PREDICTION_COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#ff7f0e", "#9467bd"];

pub struct PlotInput {
    pub points: Vec<[f64; 3]>,
    pub ground_truth: Option<Trajectory>,
    pub predictions: Vec<(String, Trajectory)>,
}

/// Read `x,y,z` from the last three columns of a CSV with a header, as
/// written for target points (`frame,t,x,y,z`) or trajectories (`t,x,y,z`).
pub fn load_points(path: &Path) -> Result<Vec<[f64; 3]>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(CliError::Input(format!(
                "{}:{}: expected at least 3 fields",
                path.display(),
                i + 1
            )));
        }
        let tail = &fields[fields.len() - 3..];
        // Empty frames of a scan CSV leave x, y, z blank.
        if tail.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let mut p = [0.0; 3];
        for (a, f) in tail.iter().enumerate() {
            p[a] = f.trim().parse().map_err(|_| {
                CliError::Input(format!("{}:{}: `{f}` is not a number", path.display(), i + 1))
            })?;
        }
        out.push(p);
    }
    Ok(out)
}

pub fn load(points: Option<&Path>, gt: Option<&Path>, predictions: &[impl AsRef<Path>]) -> Result<PlotInput> {
    let points = match points {
        Some(p) => load_points(p)?,
        None => Vec::new(),
    };
    let ground_truth = gt.map(load_trajectory).transpose()?;
    let predictions = predictions
        .iter()
        .map(|p| {
            let p = p.as_ref();
            Ok((p.display().to_string(), load_trajectory(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if predictions.is_empty() && ground_truth.is_none() && points.is_empty() {
        return Err(CliError::Input("nothing to plot".into()));
    }
    Ok(PlotInput {
        points,
        ground_truth,
        predictions,
    })
}

/// A tick step of 1, 2 or 5 times a power of ten giving about `target`
/// intervals over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with("-") && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

struct Panel {
    x0: f64,
    y0: f64,
    axes: (usize, usize),
    lo: [f64; 2],
    span: f64,
}

impl Panel {
    fn map(&self, p: &[f64; 3]) -> (f64, f64) {
        let u = (p[self.axes.0] - self.lo[0]) / self.span;
        let v = (p[self.axes.1] - self.lo[1]) / self.span;
        (self.x0 + u * PANEL, self.y0 + PANEL - v * PANEL)
    }
}

fn polyline(svg: &mut String, panel: &Panel, t: &Trajectory, color: &str) {
    let pts: Vec<String> = t
        .samples()
        .iter()
        .map(|s| {
            let (x, y) = panel.map(&s.position);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    if pts.len() == 1 {
        let (x, y) = panel.map(&t.samples()[0].position);
        let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#);
    } else {
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }
}

pub fn render(input: &PlotInput) -> String {
    let mut all: Vec<[f64; 3]> = input.points.clone();
    all.extend(input.ground_truth.iter().flat_map(|t| t.samples().iter().map(|s| s.position)));
    for (_, t) in &input.predictions {
        all.extend(t.samples().iter().map(|s| s.position));
    }

    let width = 3.0 * (MARGIN_LEFT + PANEL + MARGIN_RIGHT);
    let height = MARGIN_TOP + PANEL + MARGIN_BOTTOM;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // Legend across the top.
    let mut legend: Vec<(String, &str)> = Vec::new();
    if !input.points.is_empty() {
        legend.push(("target points".into(), POINTS_COLOR));
    }
    if input.ground_truth.is_some() {
        legend.push(("ground truth".into(), GT_COLOR));
    }
    for (i, (name, _)) in input.predictions.iter().enumerate() {
        legend.push((format!("prediction: {name}"), PREDICTION_COLORS[i % PREDICTION_COLORS.len()]));
    }
    let _ = writeln!(svg, r#"<g class="legend">"#);
    let mut lx = MARGIN_LEFT;
    for (label, color) in &legend {
        let _ = writeln!(
            svg,
            r#"<rect x="{lx}" y="14" width="14" height="4" fill="{color}"/><text x="{}" y="20">{}</text>"#,
            lx + 20.0,
            escape(label)
        );
        lx += 40.0 + 6.5 * label.len() as f64;
    }
    let _ = writeln!(svg, "</g>");

    let names = ["x", "y", "z"];
    for (pi, axes) in [(0usize, 1usize), (0, 2), (1, 2)].into_iter().enumerate() {
        let ranges: Vec<(f64, f64)> = [axes.0, axes.1]
            .iter()
            .map(|&a| {
                all.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[a]), h.max(p[a])))
            })
            .collect();
        // Equal scale on both axes, padded by 5%.
        let span = ranges
            .iter()
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max)
            .max(1.0)
            * 1.05;
        let lo: [f64; 2] = std::array::from_fn(|k| 0.5 * (ranges[k].0 + ranges[k].1) - 0.5 * span);
        let panel = Panel {
            x0: pi as f64 * (MARGIN_LEFT + PANEL + MARGIN_RIGHT) + MARGIN_LEFT,
            y0: MARGIN_TOP,
            axes,
            lo,
            span,
        };
        let title = format!("{}{}", names[axes.0].to_uppercase(), names[axes.1].to_uppercase());
        let _ = writeln!(svg, r#"<g class="panel" id="panel-{}">"#, title.to_lowercase());
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{PANEL}" height="{PANEL}" fill="none" stroke="black"/>"#,
            panel.x0, panel.y0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{title}</text>"#,
            panel.x0 + PANEL / 2.0,
            panel.y0 - 10.0
        );

        let step = tick_step(span, 5.0);
        for k in 0..2 {
            let first = (lo[k] / step).ceil() as i64;
            let last = ((lo[k] + span) / step).floor() as i64;
            for i in first..=last {
                let v = i as f64 * step;
                let f = (v - lo[k]) / span * PANEL;
                let label = tick_label(v, step);
                if k == 0 {
                    let x = panel.x0 + f;
                    let y = panel.y0 + PANEL;
                    let _ = writeln!(
                        svg,
                        r#"<line class="tick" x1="{x:.2}" y1="{y}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#,
                        y + 5.0,
                        y + 18.0
                    );
                } else {
                    let x = panel.x0;
                    let y = panel.y0 + PANEL - f;
                    let _ = writeln!(
                        svg,
                        r#"<line class="tick" x1="{}" y1="{y:.2}" x2="{x}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#,
                        x - 5.0,
                        x - 8.0,
                        y + 4.0
                    );
                }
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{} (m)</text>"#,
            panel.x0 + PANEL / 2.0,
            panel.y0 + PANEL + 38.0,
            names[axes.0]
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate({},{}) rotate(-90)" text-anchor="middle">{} (m)</text>"#,
            panel.x0 - 52.0,
            panel.y0 + PANEL / 2.0,
            names[axes.1]
        );

        if !input.points.is_empty() {
            let _ = writeln!(svg, r#"<g class="layer layer-points">"#);
            for p in &input.points {
                let (x, y) = panel.map(p);
                let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.2" fill="{POINTS_COLOR}"/>"#);
            }
            let _ = writeln!(svg, "</g>");
        }
        if let Some(gt) = &input.ground_truth {
            let _ = writeln!(svg, r#"<g class="layer layer-gt">"#);
            polyline(&mut svg, &panel, gt, GT_COLOR);
            let _ = writeln!(svg, "</g>");
        }
        for (i, (_, t)) in input.predictions.iter().enumerate() {
            let _ = writeln!(svg, r#"<g class="layer layer-prediction">"#);
            polyline(&mut svg, &panel, t, PREDICTION_COLORS[i % PREDICTION_COLORS.len()]);
            let _ = writeln!(svg, "</g>");
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn run(input: &PlotInput, out: &Path) -> Result<()> {
    write_file(out, &render(input))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps() {
        assert_eq!(tick_step(10.0, 5.0), 2.0);
        assert_eq!(tick_step(1.0, 5.0), 0.2);
        assert_eq!(tick_step(300.0, 5.0), 50.0);
        assert_eq!(tick_step(8.0, 5.0), 2.0);
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick_label(20.0, 5.0), "20");
        assert_eq!(tick_label(0.4, 0.2), "0.4");
        assert_eq!(tick_label(-0.0, 0.2), "0.0");
    }
}
