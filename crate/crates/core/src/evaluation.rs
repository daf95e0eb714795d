//! RMSE of a predicted trajectory against ground truth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("prediction and ground truth do not overlap in time ({dropped} ground-truth samples dropped)")]
    NoOverlap { dropped: usize },
    #[error("no sample pairs to evaluate")]
    EmptyPairs,
    #[error("{0} trajectory is empty")]
    EmptyTrajectory(&'static str),
    #[error("max_dt must be finite and non-negative, got {0}")]
    InvalidMaxDt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePair {
    pub t: f64,
    pub predicted: [f64; 3],
    pub truth: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub pairs: Vec<SamplePair>,
    /// Ground-truth samples farther than `max_dt` outside the prediction's
    /// time domain.
    pub dropped: usize,
}

/// Pair every ground-truth sample with the prediction linearly interpolated
/// at its timestamp. Samples up to `max_dt` outside the prediction domain
/// take the nearest end sample; farther ones are dropped.
pub fn align_by_timestamp(
    pred: &Trajectory,
    gt: &Trajectory,
    max_dt: f64,
) -> Result<Alignment, EvalError> {
    if !(max_dt.is_finite() && max_dt >= 0.0) {
        return Err(EvalError::InvalidMaxDt(max_dt));
    }
    let (lo, hi) = pred
        .time_domain()
        .ok_or(EvalError::EmptyTrajectory("predicted"))?;
    if gt.is_empty() {
        return Err(EvalError::EmptyTrajectory("ground-truth"));
    }
    let mut pairs = Vec::with_capacity(gt.len());
    let mut dropped = 0;
    for s in gt.samples() {
        if s.t < lo - max_dt || s.t > hi + max_dt {
            dropped += 1;
            continue;
        }
        pairs.push(SamplePair {
            t: s.t,
            predicted: pred.linear_at(s.t).expect("prediction is non-empty"),
            truth: s.position,
        });
    }
    if pairs.is_empty() {
        return Err(EvalError::NoOverlap { dropped });
    }
    Ok(Alignment { pairs, dropped })
}

/// Root-mean-square residual per axis.
pub fn per_axis_rmse(pairs: &[SamplePair]) -> Result<[f64; 3], EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyPairs);
    }
    let mut sums = [0.0; 3];
    for p in pairs {
        for a in 0..3 {
            let d = p.predicted[a] - p.truth[a];
            sums[a] += d * d;
        }
    }
    let n = pairs.len() as f64;
    Ok(sums.map(|s| (s / n).sqrt()))
}

/// `sqrt(dx² + dy² + dz²)`, equal to the RMS of 3D error norms.
pub fn aggregate_rmse(dx: f64, dy: f64, dz: f64) -> f64 {
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub aggregate: f64,
    pub n_pairs: usize,
    pub dropped: usize,
}

impl RmseReport {
    pub fn from_alignment(al: &Alignment) -> Result<Self, EvalError> {
        let [dx, dy, dz] = per_axis_rmse(&al.pairs)?;
        Ok(Self {
            dx,
            dy,
            dz,
            aggregate: aggregate_rmse(dx, dy, dz),
            n_pairs: al.pairs.len(),
            dropped: al.dropped,
        })
    }
}

pub fn evaluate(pred: &Trajectory, gt: &Trajectory, max_dt: f64) -> Result<RmseReport, EvalError> {
    RmseReport::from_alignment(&align_by_timestamp(pred, gt, max_dt)?)
}
