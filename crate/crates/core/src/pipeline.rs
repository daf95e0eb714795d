//! End-to-end detection: cluster the full superposition, score clusters,
//! select the target and fit its trajectory.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{cluster_window, ClusterError, ClusterLabeling, DbscanParams};
use crate::pointcloud::{PointSet, ScanSequence};
use crate::scoring::{score_all_clusters, select_target, ScoreBreakdown, ScoringError, ScoringParams, Selection};
use crate::trajectory::{
    extract_control_points, fit_spline_with_degree, interpolate, ControlSequence, FrameReducer,
    SplineModel, Trajectory, TrajectoryError,
};
use crate::voxel::{VoxelError, VoxelGrid};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Voxel(#[from] VoxelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryParams {
    /// Control points farther than this (meters) from the segment joining
    /// their neighbors are discarded.
    pub outlier_gate: f64,
    pub max_degree: usize,
    pub reducer: FrameReducer,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            outlier_gate: 3.0,
            max_degree: 3,
            reducer: FrameReducer::Centroid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionParams {
    pub dbscan: DbscanParams,
    /// Voxel edge in meters.
    pub voxel_edge: f64,
    pub scoring: ScoringParams,
    pub trajectory: TrajectoryParams,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            dbscan: DbscanParams::default(),
            voxel_edge: 0.5,
            scoring: ScoringParams::default(),
            trajectory: TrajectoryParams::default(),
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.dbscan.validate()?;
        VoxelGrid::empty(self.voxel_edge)?;
        self.scoring.validate()?;
        if self.trajectory.max_degree < 1 {
            return Err(TrajectoryError::InvalidDegree.into());
        }
        if !(self.trajectory.outlier_gate >= 0.0) {
            return Err(ScoringError::InvalidParams(format!(
                "outlier_gate must be >= 0, got {}",
                self.trajectory.outlier_gate
            ))
            .into());
        }
        Ok(())
    }
}

/// Clustering and scoring, stopping short of trajectory fitting.
#[derive(Debug, Clone)]
pub struct ScoredScene {
    pub points: PointSet,
    pub labeling: ClusterLabeling,
    pub scores: Vec<ScoreBreakdown>,
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub scene: ScoredScene,
    pub selection: Selection,
    pub control: ControlSequence,
    pub spline: SplineModel,
    pub trajectory: Trajectory,
    /// Query indices evaluated outside the spline domain.
    pub clamped: Vec<usize>,
}

impl Detection {
    pub fn labeling(&self) -> &ClusterLabeling {
        &self.scene.labeling
    }

    pub fn scores(&self) -> &[ScoreBreakdown] {
        &self.scene.scores
    }

    /// Points of the selected cluster.
    pub fn target_points(&self) -> PointSet {
        self.scene
            .labeling
            .members(&self.scene.points, self.selection.cluster_id)
            .expect("selected id comes from this labeling")
    }
}

pub fn score_scene(seq: &ScanSequence, params: &DetectionParams) -> Result<ScoredScene, PipelineError> {
    params.validate()?;
    let (points, labeling) = cluster_window(seq, seq.full_window(), params.dbscan)?;
    let scores = score_all_clusters(seq, &labeling, &params.scoring, params.voxel_edge)?;
    Ok(ScoredScene {
        points,
        labeling,
        scores,
    })
}

/// Run the full pipeline. Without explicit query times the trajectory is
/// sampled at every frame timestamp inside the fitted time domain.
pub fn detect(
    seq: &ScanSequence,
    params: &DetectionParams,
    query: Option<&[f64]>,
) -> Result<Detection, PipelineError> {
    let scene = score_scene(seq, params)?;
    fit_target(seq, scene, params, query)
}

/// Select the target of an already scored scene and fit its trajectory.
pub fn fit_target(
    seq: &ScanSequence,
    scene: ScoredScene,
    params: &DetectionParams,
    query: Option<&[f64]>,
) -> Result<Detection, PipelineError> {
    let selection = select_target(&scene.scores, params.scoring.min_margin)?;
    let control = extract_control_points(
        seq,
        &scene.labeling,
        selection.cluster_id,
        params.trajectory.outlier_gate,
        params.trajectory.reducer,
    )?;
    let spline = fit_spline_with_degree(&control, params.trajectory.max_degree)?;
    let (lo, hi) = spline.domain();
    let frame_times: Vec<f64>;
    let ts = match query {
        Some(ts) => ts,
        None => {
            frame_times = seq
                .timestamps()
                .into_iter()
                .filter(|t| (lo..=hi).contains(t))
                .collect();
            &frame_times
        }
    };
    let sampled = interpolate(&spline, ts)?;
    Ok(Detection {
        scene,
        selection,
        control,
        spline,
        trajectory: sampled.trajectory,
        clamped: sampled.clamped,
    })
}
