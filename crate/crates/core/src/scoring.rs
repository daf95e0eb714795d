//! Moving-target scoring.
//!
//! For every global cluster the sequence is cut into fixed-length windows.
//! Each window contributes `exp(R)`, where `R` is the cluster's density in
//! that window over its density in the full superposition, and each frame
//! pair inside the window contributes `ln(1 / max(IoU, floor))` of the
//! cluster's per-frame voxel sets:
//!
//! ```text
//! psi_rho = sum_w exp(R_w)
//! psi_iou = sum_pairs ln(1 / max(IoU, floor))
//! psi     = psi_rho + lambda * psi_iou
//! ```
//!
//! Static surfaces keep re-hitting the same voxels (IoU near 1) and pile up
//! points over time (R well below 1); a moving target does neither. The
//! highest `psi` is the target.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{cluster_window, ClusterError, ClusterLabeling};
use crate::pointcloud::{CloudError, PointSet, ScanSequence, WindowSpec};
use crate::voxel::{density_of, relative_density, voxel_iou, VoxelError, VoxelGrid};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("labeling does not cover the full sequence: {0}")]
    LabelingMismatch(String),
    #[error("invalid scoring parameters: {0}")]
    InvalidParams(String),
    #[error("no eligible clusters to select from")]
    NoClusters,
    #[error(transparent)]
    Voxel(#[from] VoxelError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Cloud(#[from] CloudError),
}

/// Which frame pairs inside a window contribute an IoU term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairSchedule {
    /// `(i, i+1)` for every frame of the window.
    #[default]
    Consecutive,
    /// Every `(i, j)` with `i < j` inside the window.
    AllPairs,
    /// Only the window's first and last frame.
    Endpoints,
}

impl std::str::FromStr for PairSchedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consecutive" => Ok(Self::Consecutive),
            "all_pairs" | "all-pairs" => Ok(Self::AllPairs),
            "endpoints" => Ok(Self::Endpoints),
            other => Err(format!(
                "unknown pair schedule `{other}` (expected consecutive, all_pairs or endpoints)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoringParams {
    /// Weight of the IoU term.
    pub lambda: f64,
    /// Lower clamp applied to IoU before the logarithm.
    pub iou_floor: f64,
    pub pair_schedule: PairSchedule,
    /// Frames per local window.
    pub window_len: usize,
    /// Re-run DBSCAN on every window instead of restricting the global
    /// labels.
    pub rerun_local_clustering: bool,
    /// Clusters occupying more voxels than this in the full superposition
    /// are excluded before scoring. `None` disables the filter.
    pub max_cluster_voxels: Option<usize>,
    /// Relative margin below which a selection is flagged low-confidence.
    pub min_margin: f64,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            iou_floor: 1e-6,
            pair_schedule: PairSchedule::Consecutive,
            window_len: 10,
            rerun_local_clustering: false,
            max_cluster_voxels: Some(5000),
            min_margin: 0.05,
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<(), ScoringError> {
        let bad = |m: String| Err(ScoringError::InvalidParams(m));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(self.iou_floor > 0.0 && self.iou_floor <= 1.0) {
            return bad(format!("iou_floor must lie in (0, 1], got {}", self.iou_floor));
        }
        if self.window_len < 2 {
            return bad(format!("window_len must be at least 2, got {}", self.window_len));
        }
        if !(self.min_margin.is_finite() && self.min_margin >= 0.0) {
            return bad(format!("min_margin must be finite and >= 0, got {}", self.min_margin));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairIou {
    pub frame_a: usize,
    pub frame_b: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowContribution {
    pub start: usize,
    pub end: usize,
    /// Cluster points inside the window.
    pub points: usize,
    pub relative_density: f64,
    pub pairs: Vec<PairIou>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub cluster_id: usize,
    pub point_count: usize,
    /// Occupied voxels in the full superposition.
    pub global_voxels: usize,
    pub global_density: f64,
    pub frames_present: usize,
    pub eligible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
    pub psi_iou: f64,
    pub psi_rho: f64,
    pub psi: f64,
    pub windows: Vec<WindowContribution>,
}

/// `sum ln(1 / max(iou, floor))`.
pub fn iou_score(ious: &[f64], iou_floor: f64) -> f64 {
    ious.iter().map(|&v| (1.0 / v.max(iou_floor)).ln()).sum()
}

/// `sum exp(R)`.
pub fn density_score(rs: &[f64]) -> f64 {
    rs.iter().map(|r| r.exp()).sum()
}

pub fn combined_score(psi_rho: f64, psi_iou: f64, lambda: f64) -> f64 {
    psi_rho + lambda * psi_iou
}

/// Consecutive windows of `len` frames covering `0..frames`; the last one
/// may be shorter.
pub fn partition_windows(frames: usize, len: usize) -> Vec<WindowSpec> {
    (0..frames)
        .step_by(len.max(1))
        .map(|s| WindowSpec::new(s, (s + len - 1).min(frames - 1)))
        .collect()
}

fn schedule_pairs(frames: &[usize], w: WindowSpec, schedule: PairSchedule) -> Vec<(usize, usize)> {
    match schedule {
        PairSchedule::Consecutive => frames.windows(2).map(|p| (p[0], p[1])).collect(),
        PairSchedule::AllPairs => {
            let mut out = Vec::new();
            for (a, &i) in frames.iter().enumerate() {
                for &j in &frames[a + 1..] {
                    out.push((i, j));
                }
            }
            out
        }
        PairSchedule::Endpoints => {
            if w.start != w.end {
                vec![(w.start, w.end)]
            } else {
                Vec::new()
            }
        }
    }
}

/// Positions grouped by frame, for the frames where the group is non-empty.
type FrameBuckets = BTreeMap<usize, Vec<[f64; 3]>>;

fn bucket_by_frame(ps: &PointSet, indices: &[usize]) -> FrameBuckets {
    let mut out = FrameBuckets::new();
    for &i in indices {
        let p = ps.points()[i];
        out.entry(p.frame_index).or_default().push(p.position());
    }
    out
}

fn window_contribution(
    buckets: &FrameBuckets,
    w: WindowSpec,
    global: crate::voxel::DensityValue,
    params: &ScoringParams,
    edge: f64,
) -> Result<Option<WindowContribution>, ScoringError> {
    let in_window: Vec<(&usize, &Vec<[f64; 3]>)> = buckets.range(w.start..=w.end).collect();
    if in_window.is_empty() {
        return Ok(None);
    }
    let count: usize = in_window.iter().map(|(_, v)| v.len()).sum();
    let local_grid = VoxelGrid::from_positions(
        in_window.iter().flat_map(|(_, v)| v.iter().copied()),
        edge,
    )?;
    let r = relative_density(density_of(count, &local_grid)?, global)?;

    // frame schedules only pair frames where the cluster is present
    let present: Vec<usize> = w.frames().collect();
    let pairs = schedule_pairs(&present, w, params.pair_schedule);
    let mut grids: BTreeMap<usize, VoxelGrid> = BTreeMap::new();
    let mut pair_ious = Vec::new();
    for (a, b) in pairs {
        let (Some(pa), Some(pb)) = (buckets.get(&a), buckets.get(&b)) else {
            continue;
        };
        for (f, pts) in [(a, pa), (b, pb)] {
            if let std::collections::btree_map::Entry::Vacant(e) = grids.entry(f) {
                e.insert(VoxelGrid::from_positions(pts.iter().copied(), edge)?);
            }
        }
        let iou = voxel_iou(&grids[&a], &grids[&b])?;
        pair_ious.push(PairIou {
            frame_a: a,
            frame_b: b,
            iou,
        });
    }
    Ok(Some(WindowContribution {
        start: w.start,
        end: w.end,
        points: count,
        relative_density: r.0,
        pairs: pair_ious,
    }))
}

/// Window-local clusterings used when `rerun_local_clustering` is set.
struct LocalClusterings {
    windows: Vec<(WindowSpec, usize, PointSet, ClusterLabeling)>,
}

impl LocalClusterings {
    fn compute(
        seq: &ScanSequence,
        windows: &[WindowSpec],
        labeling: &ClusterLabeling,
    ) -> Result<Self, ScoringError> {
        let windows = windows
            .par_iter()
            .map(|&w| {
                let offset = seq.point_range(w)?.start;
                let (ps, cl) = match cluster_window(seq, w, labeling.params()) {
                    Ok(r) => r,
                    // a window without any points has no local clusters
                    Err(ClusterError::EmptyInput) => (
                        PointSet::default(),
                        ClusterLabeling::from_raw_labels(&[], w, labeling.params()),
                    ),
                    Err(e) => return Err(e.into()),
                };
                Ok((w, offset, ps, cl))
            })
            .collect::<Result<Vec<_>, ScoringError>>()?;
        Ok(Self { windows })
    }

    /// The local cluster holding most of global cluster `members` inside
    /// window `idx`, as frame buckets.
    fn matched_buckets(&self, idx: usize, members: &[usize]) -> FrameBuckets {
        let (w, offset, ps, cl) = &self.windows[idx];
        let range = *offset..offset + ps.len();
        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        for &g in members.iter().filter(|g| range.contains(g)) {
            if let Some(l) = cl.label(g - offset) {
                *votes.entry(l).or_default() += 1;
            }
        }
        // ties go to the lowest local id
        let best = votes
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&l, _)| l);
        match best {
            Some(l) => {
                let local = cl.member_indices(l).expect("voted label exists");
                let mut out = bucket_by_frame(ps, &local);
                out.retain(|f, _| w.contains(*f));
                out
            }
            None => FrameBuckets::new(),
        }
    }
}

/// Score every cluster of a full-sequence labeling. Results are ordered by
/// cluster id.
pub fn score_all_clusters(
    seq: &ScanSequence,
    labeling: &ClusterLabeling,
    params: &ScoringParams,
    edge: f64,
) -> Result<Vec<ScoreBreakdown>, ScoringError> {
    params.validate()?;
    VoxelGrid::empty(edge)?;
    if labeling.source_window() != seq.full_window() {
        return Err(ScoringError::LabelingMismatch(format!(
            "labeling window [{}, {}] vs sequence window [0, {}]",
            labeling.source_window().start,
            labeling.source_window().end,
            seq.frame_count() - 1
        )));
    }
    if labeling.labels().len() != seq.point_count() {
        return Err(ScoringError::LabelingMismatch(format!(
            "{} labels for {} points",
            labeling.labels().len(),
            seq.point_count()
        )));
    }
    let all = seq.superimpose(seq.full_window())?;
    let windows = partition_windows(seq.frame_count(), params.window_len);
    let local = if params.rerun_local_clustering {
        Some(LocalClusterings::compute(seq, &windows, labeling)?)
    } else {
        None
    };

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); labeling.cluster_count()];
    for (i, l) in labeling.labels().iter().enumerate() {
        if let Some(k) = l {
            members[*k].push(i);
        }
    }

    members
        .par_iter()
        .enumerate()
        .map(|(k, idx)| {
            score_cluster(k, idx, &all, &windows, local.as_ref(), params, edge)
        })
        .collect()
}

fn score_cluster(
    k: usize,
    members: &[usize],
    all: &PointSet,
    windows: &[WindowSpec],
    local: Option<&LocalClusterings>,
    params: &ScoringParams,
    edge: f64,
) -> Result<ScoreBreakdown, ScoringError> {
    let buckets = bucket_by_frame(all, members);
    let global_grid = VoxelGrid::from_positions(
        members.iter().map(|&i| all.points()[i].position()),
        edge,
    )?;
    let global_density = density_of(members.len(), &global_grid)?;
    let mut out = ScoreBreakdown {
        cluster_id: k,
        point_count: members.len(),
        global_voxels: global_grid.len(),
        global_density: global_density.0,
        frames_present: buckets.len(),
        eligible: false,
        excluded: None,
        psi_iou: 0.0,
        psi_rho: 0.0,
        psi: 0.0,
        windows: Vec::new(),
    };
    if let Some(max) = params.max_cluster_voxels {
        if global_grid.len() > max {
            out.excluded = Some(format!(
                "occupies {} voxels, above the {max}-voxel limit",
                global_grid.len()
            ));
            return Ok(out);
        }
    }
    if buckets.len() < 2 {
        out.excluded = Some(format!("present in {} frame(s)", buckets.len()));
    } else {
        out.eligible = true;
    }

    for (wi, &w) in windows.iter().enumerate() {
        let contribution = match local {
            Some(lc) => {
                let matched = lc.matched_buckets(wi, members);
                window_contribution(&matched, w, global_density, params, edge)?
            }
            None => window_contribution(&buckets, w, global_density, params, edge)?,
        };
        out.windows.extend(contribution);
    }
    let rs: Vec<f64> = out.windows.iter().map(|c| c.relative_density).collect();
    let ious: Vec<f64> = out
        .windows
        .iter()
        .flat_map(|c| c.pairs.iter().map(|p| p.iou))
        .collect();
    out.psi_rho = density_score(&rs);
    out.psi_iou = iou_score(&ious, params.iou_floor);
    out.psi = combined_score(out.psi_rho, out.psi_iou, params.lambda);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub cluster_id: usize,
    pub psi: f64,
    /// Cluster whose score was compared against, if any.
    pub runner_up: Option<usize>,
    pub confidence: f64,
    pub low_confidence: bool,
}

/// Pick the eligible cluster with the highest `psi`.
///
/// Exact ties go to the cluster with fewer global voxels, then the lower id.
/// Confidence is `(psi_best - psi_second) / |psi_best|`. When there is no
/// second eligible cluster, the best cluster's own `psi_rho` (its score had
/// it shown no voxel motion at all) stands in for `psi_second`.
pub fn select_target(scores: &[ScoreBreakdown], min_margin: f64) -> Result<Selection, ScoringError> {
    let mut ranked: Vec<&ScoreBreakdown> = scores.iter().filter(|s| s.eligible).collect();
    if ranked.is_empty() {
        return Err(ScoringError::NoClusters);
    }
    ranked.sort_by(|a, b| {
        b.psi
            .total_cmp(&a.psi)
            .then(a.global_voxels.cmp(&b.global_voxels))
            .then(a.cluster_id.cmp(&b.cluster_id))
    });
    let best = ranked[0];
    let (runner_up, second) = match ranked.get(1) {
        Some(s) => (Some(s.cluster_id), s.psi),
        None => (None, best.psi_rho),
    };
    let confidence = if best.psi == 0.0 {
        0.0
    } else {
        (best.psi - second) / best.psi.abs()
    };
    Ok(Selection {
        cluster_id: best.cluster_id,
        psi: best.psi,
        runner_up,
        confidence,
        low_confidence: confidence < min_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn breakdown(id: usize, psi: f64, voxels: usize) -> ScoreBreakdown {
        ScoreBreakdown {
            cluster_id: id,
            point_count: 10,
            global_voxels: voxels,
            global_density: 1.0,
            frames_present: 5,
            eligible: true,
            excluded: None,
            psi_iou: 0.0,
            psi_rho: psi,
            psi,
            windows: Vec::new(),
        }
    }

    #[test]
    fn iou_score_values() {
        assert_eq!(iou_score(&[1.0, 1.0, 1.0], 1e-6), 0.0);
        assert!((iou_score(&[0.0], 1e-6) - 13.815_510_557_964_274).abs() < 1e-12);
        assert!((iou_score(&[0.5, 0.25], 1e-6) - 3.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((iou_score(&[0.5, 0.25], 1e-6) - 2.0794).abs() < 5e-5);
        assert_eq!(iou_score(&[], 1e-6), 0.0);
    }

    #[test]
    fn density_score_values() {
        assert_eq!(density_score(&[1.0]), std::f64::consts::E);
        let e = std::f64::consts::E;
        assert!((density_score(&[1.0, 2.0]) - (e + e * e)).abs() < 1e-15);
        assert!((density_score(&[1.0, 2.0]) - 10.1073).abs() < 5e-5);
        assert_eq!(density_score(&[]), 0.0);
    }

    #[test]
    fn combined_score_values() {
        assert_eq!(combined_score(10.1073, 2.0794, 0.0), 10.1073);
        assert!((combined_score(10.1073, 2.0794, 1.0) - 12.1867).abs() < 1e-12);
        let one = combined_score(3.0, 2.0, 1.0);
        let two = combined_score(3.0, 2.0, 2.0);
        assert_eq!(two - one, 2.0);
    }

    #[test]
    fn windows_partition_frames() {
        let w = partition_windows(25, 10);
        assert_eq!(
            w,
            vec![WindowSpec::new(0, 9), WindowSpec::new(10, 19), WindowSpec::new(20, 24)]
        );
        assert_eq!(partition_windows(3, 10), vec![WindowSpec::new(0, 2)]);
    }

    #[test]
    fn pair_schedules() {
        let w = WindowSpec::new(0, 3);
        let f: Vec<usize> = w.frames().collect();
        assert_eq!(schedule_pairs(&f, w, PairSchedule::Consecutive), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(schedule_pairs(&f, w, PairSchedule::AllPairs).len(), 6);
        assert_eq!(schedule_pairs(&f, w, PairSchedule::Endpoints), vec![(0, 3)]);
    }

    #[test]
    fn argmax_selection() {
        let s = vec![breakdown(0, 5.0, 10), breakdown(1, 12.2, 10), breakdown(2, 3.1, 10)];
        let sel = select_target(&s, 0.05).unwrap();
        assert_eq!(sel.cluster_id, 1);
        assert_eq!(sel.runner_up, Some(0));
        assert!((sel.confidence - (12.2 - 5.0) / 12.2).abs() < 1e-15);
        assert!(!sel.low_confidence);
    }

    #[test]
    fn ties_prefer_compact_clusters() {
        let s = vec![breakdown(0, 7.0, 100), breakdown(1, 7.0, 4)];
        let sel = select_target(&s, 0.05).unwrap();
        assert_eq!(sel.cluster_id, 1);
        assert_eq!(sel.confidence, 0.0);
        assert!(sel.low_confidence);
    }

    #[test]
    fn ineligible_clusters_are_skipped() {
        let mut a = breakdown(0, 100.0, 1);
        a.eligible = false;
        let s = vec![a.clone(), breakdown(1, 2.0, 3)];
        assert_eq!(select_target(&s, 0.0).unwrap().cluster_id, 1);
        assert!(matches!(select_target(&[a], 0.0), Err(ScoringError::NoClusters)));
        assert!(matches!(select_target(&[], 0.0), Err(ScoringError::NoClusters)));
    }

    #[test]
    fn lone_cluster_measured_against_its_static_baseline() {
        let mut b = breakdown(0, 0.0, 4);
        b.psi_rho = 10.0;
        b.psi_iou = 0.0;
        b.psi = 10.0;
        let sel = select_target(&[b.clone()], 0.05).unwrap();
        assert_eq!(sel.confidence, 0.0);
        assert!(sel.low_confidence);
        b.psi_iou = 10.0;
        b.psi = 20.0;
        let sel = select_target(&[b], 0.05).unwrap();
        assert_eq!(sel.confidence, 0.5);
        assert!(!sel.low_confidence);
    }

    #[test]
    fn params_validation() {
        assert!(ScoringParams::default().validate().is_ok());
        let mut p = ScoringParams::default();
        p.window_len = 1;
        assert!(p.validate().is_err());
        p = ScoringParams::default();
        p.lambda = -1.0;
        assert!(p.validate().is_err());
        p = ScoringParams::default();
        p.iou_floor = 0.0;
        assert!(p.validate().is_err());
        p.iou_floor = 1.5;
        assert!(p.validate().is_err());
    }
}
