//! Control-point extraction, interpolating B-spline fitting over time, and
//! trajectory sampling.
//!
//! The selected cluster contributes one control point per frame in which it
//! appears. Each axis is interpolated by a B-spline of degree `k` (cubic
//! unless the sequence is too short) whose knot vector follows the
//! not-a-knot rule: the end knots are repeated `k + 1` times and, for cubic
//! fits, the second and second-to-last data sites are not knots. Parameter
//! values are the raw frame timestamps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusterLabeling;
use crate::numfmt::format_sig9;
use crate::pointcloud::ScanSequence;

pub const TRAJECTORY_CSV_HEADER: &str = "t,x,y,z";

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("target cluster appears in {0} frame(s); at least 2 are needed")]
    TooFewFrames(usize),
    #[error("timestamps must be strictly increasing (t={previous} followed by t={current})")]
    DuplicateTimestamps { previous: f64, current: f64 },
    #[error("non-finite value in control point or sample at t={0}")]
    NonFinite(f64),
    #[error("query timestamp list is empty")]
    EmptyQuery,
    #[error("query timestamps must be strictly increasing")]
    NonIncreasingQuery,
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("degree cap must be at least 1")]
    InvalidDegree,
    #[error("labeling does not match the sequence: {0}")]
    LabelingMismatch(String),
    #[error("{source_name}:{line}: malformed field `{field}`: {reason}")]
    MalformedRecord {
        source_name: String,
        line: usize,
        field: String,
        reason: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = TrajectoryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub t: f64,
    pub position: [f64; 3],
}

/// Control points in strictly increasing time order, at least two.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    points: Vec<ControlPoint>,
}

impl ControlSequence {
    pub fn new(points: Vec<ControlPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(TrajectoryError::TooFewFrames(points.len()));
        }
        check_samples(points.iter().map(|c| (c.t, c.position)))?;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[ControlPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_samples(samples: impl Iterator<Item = (f64, [f64; 3])>) -> Result<()> {
    let mut prev: Option<f64> = None;
    for (t, p) in samples {
        if !t.is_finite() || !p.iter().all(|c| c.is_finite()) {
            return Err(TrajectoryError::NonFinite(t));
        }
        if let Some(previous) = prev {
            if t <= previous {
                return Err(TrajectoryError::DuplicateTimestamps {
                    previous,
                    current: t,
                });
            }
        }
        prev = Some(t);
    }
    Ok(())
}

/// How the points of one frame collapse to a single control point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameReducer {
    #[default]
    Centroid,
    /// Per-axis median.
    Median,
}

impl std::str::FromStr for FrameReducer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centroid" => Ok(Self::Centroid),
            "median" => Ok(Self::Median),
            other => Err(format!("unknown reducer `{other}` (expected centroid or median)")),
        }
    }
}

fn reduce(points: &[[f64; 3]], reducer: FrameReducer) -> [f64; 3] {
    match reducer {
        FrameReducer::Centroid => {
            let mut acc = [0.0; 3];
            for p in points {
                for a in 0..3 {
                    acc[a] += p[a];
                }
            }
            let n = points.len() as f64;
            [acc[0] / n, acc[1] / n, acc[2] / n]
        }
        FrameReducer::Median => {
            let mut out = [0.0; 3];
            for (a, slot) in out.iter_mut().enumerate() {
                let mut v: Vec<f64> = points.iter().map(|p| p[a]).collect();
                v.sort_by(f64::total_cmp);
                let m = v.len() / 2;
                *slot = if v.len() % 2 == 1 {
                    v[m]
                } else {
                    0.5 * (v[m - 1] + v[m])
                };
            }
            out
        }
    }
}

/// Distance from `p` to the segment `a`–`b`.
pub fn distance_to_segment(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let s = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - s * ab[0], ap[1] - s * ab[1], ap[2] - s * ab[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Drop interior control points farther than `gate` from the segment joining
/// their neighbors. Single pass; neighbors are taken from the input.
pub fn gate_outliers(points: &[ControlPoint], gate: f64) -> Vec<ControlPoint> {
    let n = points.len();
    points
        .iter()
        .enumerate()
        .filter(|&(i, c)| {
            if i == 0 || i + 1 == n {
                return true;
            }
            distance_to_segment(c.position, points[i - 1].position, points[i + 1].position) <= gate
        })
        .map(|(_, c)| *c)
        .collect()
}

/// One control point per frame in which cluster `target` has points.
pub fn extract_control_points(
    seq: &ScanSequence,
    labeling: &ClusterLabeling,
    target: usize,
    outlier_gate: f64,
    reducer: FrameReducer,
) -> Result<ControlSequence> {
    if labeling.labels().len() != seq.point_count() {
        return Err(TrajectoryError::LabelingMismatch(format!(
            "{} labels for {} points",
            labeling.labels().len(),
            seq.point_count()
        )));
    }
    if target >= labeling.cluster_count() {
        return Err(TrajectoryError::LabelingMismatch(format!(
            "cluster {target} does not exist ({} clusters)",
            labeling.cluster_count()
        )));
    }
    let mut raw = Vec::new();
    let mut offset = 0;
    for frame in seq.frames() {
        let pts: Vec<[f64; 3]> = frame
            .points()
            .iter()
            .enumerate()
            .filter(|(i, _)| labeling.label(offset + i) == Some(target))
            .map(|(_, p)| p.position())
            .collect();
        offset += frame.len();
        if !pts.is_empty() {
            raw.push(ControlPoint {
                t: frame.timestamp(),
                position: reduce(&pts, reducer),
            });
        }
    }
    if raw.len() < 2 {
        return Err(TrajectoryError::TooFewFrames(raw.len()));
    }
    ControlSequence::new(gate_outliers(&raw, outlier_gate))
}

/// Interpolating B-spline over time, one coefficient triple per basis
/// function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineModel {
    degree: usize,
    knots: Vec<f64>,
    coefficients: Vec<[f64; 3]>,
}

impl SplineModel {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn coefficients(&self) -> &[[f64; 3]] {
        &self.coefficients
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Position at `t`; `t` is clamped into the domain.
    pub fn evaluate(&self, t: f64) -> [f64; 3] {
        let (lo, hi) = self.domain();
        let u = t.clamp(lo, hi);
        let span = find_span(&self.knots, self.degree, self.coefficients.len(), u);
        let basis = basis_functions(&self.knots, self.degree, span, u);
        let mut out = [0.0; 3];
        for (r, b) in basis.iter().enumerate() {
            let c = self.coefficients[span - self.degree + r];
            for a in 0..3 {
                out[a] += b * c[a];
            }
        }
        out
    }
}

/// Index `mu` with `knots[mu] <= u < knots[mu + 1]`, restricted to the
/// valid range `degree..n_coef`; `u == t_max` maps to the last span.
fn find_span(knots: &[f64], degree: usize, n_coef: usize, u: f64) -> usize {
    if u >= knots[n_coef] {
        return n_coef - 1;
    }
    if u <= knots[degree] {
        return degree;
    }
    // first knot strictly greater than u, minus one
    let pos = knots[degree..=n_coef].partition_point(|&k| k <= u);
    degree + pos - 1
}

/// The `degree + 1` non-zero B-spline basis values at `u` in span `span`
/// (Cox–de Boor triangle).
fn basis_functions(knots: &[f64], degree: usize, span: usize, u: f64) -> Vec<f64> {
    let mut n = vec![0.0; degree + 1];
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    n[0] = 1.0;
    for j in 1..=degree {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Knot vector for interpolation of degree `k` at sites `x`.
fn interpolation_knots(x: &[f64], k: usize) -> Vec<f64> {
    let n = x.len();
    let mut knots = Vec::with_capacity(n + k + 1);
    knots.extend(std::iter::repeat_n(x[0], k + 1));
    if k % 2 == 1 {
        let h = k.div_ceil(2);
        knots.extend_from_slice(&x[h..n - h]);
    } else {
        let h = k / 2;
        for i in h..n - 1 - h {
            knots.push(0.5 * (x[i] + x[i + 1]));
        }
    }
    knots.extend(std::iter::repeat_n(x[n - 1], k + 1));
    debug_assert_eq!(knots.len(), n + k + 1);
    knots
}

/// Solve the banded collocation system without pivoting. B-spline
/// collocation matrices satisfying the Schoenberg–Whitney condition are
/// totally positive, so elimination in natural order is stable.
fn solve_banded(rows: Vec<(usize, Vec<f64>)>, rhs: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let n = rows.len();
    let mut lower = 0;
    let mut upper = 0;
    for (j, (first, vals)) in rows.iter().enumerate() {
        lower = lower.max(j.saturating_sub(*first));
        upper = upper.max((first + vals.len() - 1).saturating_sub(j));
    }
    let width = lower + upper + 1;
    // band[j][c - j + lower] holds A[j][c]
    let mut band = vec![vec![0.0; width]; n];
    for (j, (first, vals)) in rows.iter().enumerate() {
        for (o, v) in vals.iter().enumerate() {
            band[j][first + o + lower - j] = *v;
        }
    }
    let mut b = rhs.to_vec();
    for c in 0..n {
        let pivot = band[c][lower];
        for r in c + 1..=(c + lower).min(n - 1) {
            let factor = band[r][c + lower - r] / pivot;
            if factor == 0.0 {
                continue;
            }
            for cc in c..=(c + upper).min(n - 1) {
                band[r][cc + lower - r] -= factor * band[c][cc + lower - c];
            }
            for a in 0..3 {
                b[r][a] -= factor * b[c][a];
            }
        }
    }
    let mut x = vec![[0.0; 3]; n];
    for c in (0..n).rev() {
        let mut acc = b[c];
        for cc in c + 1..=(c + upper).min(n - 1) {
            for a in 0..3 {
                acc[a] -= band[c][cc + lower - c] * x[cc][a];
            }
        }
        for a in 0..3 {
            x[c][a] = acc[a] / band[c][lower];
        }
    }
    x
}

/// Cubic interpolating spline (degree lowered to `len - 1` for 2 or 3
/// control points).
pub fn fit_spline(cs: &ControlSequence) -> SplineModel {
    fit_spline_with_degree(cs, 3).expect("degree 3 is a valid cap")
}

/// Interpolating spline of degree `min(max_degree, len - 1)`.
pub fn fit_spline_with_degree(cs: &ControlSequence, max_degree: usize) -> Result<SplineModel> {
    if max_degree < 1 {
        return Err(TrajectoryError::InvalidDegree);
    }
    let x: Vec<f64> = cs.points.iter().map(|c| c.t).collect();
    let y: Vec<[f64; 3]> = cs.points.iter().map(|c| c.position).collect();
    let n = x.len();
    let k = max_degree.min(n - 1);
    let knots = interpolation_knots(&x, k);
    let rows = x
        .iter()
        .map(|&u| {
            let span = find_span(&knots, k, n, u);
            (span - k, basis_functions(&knots, k, span, u))
        })
        .collect();
    let coefficients = solve_banded(rows, &y);
    Ok(SplineModel {
        degree: k,
        knots,
        coefficients,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub position: [f64; 3],
}

/// Timestamped positions, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
}

impl Trajectory {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        check_samples(samples.iter().map(|s| (s.t, s.position)))?;
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_domain(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.t, self.samples.last()?.t))
    }

    /// Piecewise-linear position at `t`, clamped to the end samples.
    pub fn linear_at(&self, t: f64) -> Option<[f64; 3]> {
        let s = &self.samples;
        let first = s.first()?;
        let last = s.last()?;
        if t <= first.t {
            return Some(first.position);
        }
        if t >= last.t {
            return Some(last.position);
        }
        let hi = s.partition_point(|x| x.t <= t);
        let (a, b) = (s[hi - 1], s[hi]);
        if a.t == t {
            return Some(a.position);
        }
        let w = (t - a.t) / (b.t - a.t);
        Some(std::array::from_fn(|i| a.position[i] + w * (b.position[i] - a.position[i])))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(TRAJECTORY_CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                format_sig9(s.t),
                format_sig9(s.position[0]),
                format_sig9(s.position[1]),
                format_sig9(s.position[2])
            );
        }
        out
    }

    pub fn parse_csv(text: &str, source_name: &str) -> Result<Self> {
        let malformed = |line: usize, field: &str, reason: String| TrajectoryError::MalformedRecord {
            source_name: source_name.to_string(),
            line,
            field: field.to_string(),
            reason,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim().trim_start_matches('\u{feff}') == TRAJECTORY_CSV_HEADER => {}
            Some((i, h)) => {
                return Err(malformed(
                    i + 1,
                    "header",
                    format!("expected `{TRAJECTORY_CSV_HEADER}`, found `{}`", h.trim()),
                ))
            }
            None => return Err(TrajectoryError::EmptyTrajectory),
        }
        let mut samples = Vec::new();
        for (i, raw) in lines {
            let fields: Vec<&str> = raw.split(',').collect();
            if fields.len() != 4 {
                return Err(malformed(i + 1, "row", format!("expected 4 fields, found {}", fields.len())));
            }
            let mut v = [0.0; 4];
            for (k, name) in ["t", "x", "y", "z"].iter().enumerate() {
                let parsed: f64 = fields[k]
                    .trim()
                    .parse()
                    .map_err(|_| malformed(i + 1, name, format!("`{}` is not a number", fields[k])))?;
                if !parsed.is_finite() {
                    return Err(malformed(i + 1, name, format!("`{}` is not finite", fields[k])));
                }
                v[k] = parsed;
            }
            samples.push(Sample {
                t: v[0],
                position: [v[1], v[2], v[3]],
            });
        }
        if samples.is_empty() {
            return Err(TrajectoryError::EmptyTrajectory);
        }
        Self::new(samples)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| TrajectoryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_csv(&text, &path.display().to_string())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| TrajectoryError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolated {
    pub trajectory: Trajectory,
    /// Indices of queries that fell outside the spline domain and were
    /// evaluated at the nearest boundary.
    pub clamped: Vec<usize>,
}

/// Sample the spline at strictly increasing query times.
pub fn interpolate(sm: &SplineModel, ts: &[f64]) -> Result<Interpolated> {
    if ts.is_empty() {
        return Err(TrajectoryError::EmptyQuery);
    }
    if ts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(TrajectoryError::NonIncreasingQuery);
    }
    let (lo, hi) = sm.domain();
    let mut clamped = Vec::new();
    let mut samples = Vec::with_capacity(ts.len());
    for (i, &t) in ts.iter().enumerate() {
        if !t.is_finite() {
            return Err(TrajectoryError::NonFinite(t));
        }
        if t < lo || t > hi {
            clamped.push(i);
        }
        samples.push(Sample {
            t,
            position: sm.evaluate(t),
        });
    }
    Ok(Interpolated {
        trajectory: Trajectory::new(samples)?,
        clamped,
    })
}
