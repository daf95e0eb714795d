//! Unsupervised UAV trajectory estimation from sparse LiDAR scan sequences.
//!
//! Frames are superimposed and clustered with DBSCAN. Each cluster is then
//! scored on how its voxel occupancy and point density evolve over time:
//! static structure keeps re-hitting the same voxels and accumulates
//! density, a small moving target does not. The best-scoring cluster's
//! per-frame centroids are interpolated with a cubic B-spline to give the
//! UAV trajectory, which can be evaluated against ground truth by RMSE.

pub mod clustering;
pub mod evaluation;
pub mod numfmt;
pub mod pipeline;
pub mod pointcloud;
pub mod scoring;
pub mod synthetic;
pub mod trajectory;
pub mod voxel;

pub use clustering::{cluster_members, dbscan, ClusterLabeling, DbscanParams};
pub use evaluation::{aggregate_rmse, align_by_timestamp, per_axis_rmse, RmseReport};
pub use pipeline::{detect, DetectionParams, TrajectoryParams};
pub use pointcloud::{load_sequence, Point, PointSet, ScanFormat, ScanSequence, WindowSpec};
pub use scoring::{score_all_clusters, select_target, ScoreBreakdown, ScoringParams};
pub use trajectory::{fit_spline, interpolate, SplineModel, Trajectory};
pub use voxel::{density, relative_density, voxel_iou, voxelize, VoxelGrid};
