//! Occupied-voxel sets on a lattice anchored at the world origin, and the
//! cluster statistics built on them: occupied volume, point density, voxel
//! IoU between two frames, and local/global relative density.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pointcloud::PointSet;

#[derive(Debug, Error, PartialEq)]
pub enum VoxelError {
    #[error("voxel edge must be positive and finite, got {0}")]
    NonPositiveEdge(f64),
    #[error("density of an empty cluster is undefined")]
    EmptyCluster,
    #[error("voxel grids have different edges ({0} vs {1})")]
    EdgeMismatch(f64, f64),
    #[error("IoU of two empty voxel grids is undefined")]
    BothEmpty,
    #[error("global density must be positive, got {0}")]
    ZeroGlobalDensity(f64),
}

pub type VoxelKey = (i64, i64, i64);

/// Occupied cells of a point set at a fixed edge length. Voxel (0,0,0)
/// spans `[0, edge)` on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    edge: f64,
    occupied: HashSet<VoxelKey>,
}

impl VoxelGrid {
    pub fn empty(edge: f64) -> Result<Self, VoxelError> {
        check_edge(edge)?;
        Ok(Self {
            edge,
            occupied: HashSet::new(),
        })
    }

    pub fn from_positions<I>(positions: I, edge: f64) -> Result<Self, VoxelError>
    where
        I: IntoIterator<Item = [f64; 3]>,
    {
        let mut grid = Self::empty(edge)?;
        grid.occupied
            .extend(positions.into_iter().map(|p| voxel_of(p, edge)));
        Ok(grid)
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }

    pub fn occupied(&self) -> &HashSet<VoxelKey> {
        &self.occupied
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    /// Occupied volume in cubic meters.
    pub fn volume(&self) -> f64 {
        self.occupied.len() as f64 * self.edge.powi(3)
    }
}

fn check_edge(edge: f64) -> Result<(), VoxelError> {
    if edge.is_finite() && edge > 0.0 {
        Ok(())
    } else {
        Err(VoxelError::NonPositiveEdge(edge))
    }
}

#[inline]
pub fn voxel_of(p: [f64; 3], edge: f64) -> VoxelKey {
    (
        (p[0] / edge).floor() as i64,
        (p[1] / edge).floor() as i64,
        (p[2] / edge).floor() as i64,
    )
}

pub fn voxelize(ps: &PointSet, edge: f64) -> Result<VoxelGrid, VoxelError> {
    VoxelGrid::from_positions(ps.points().iter().map(|p| p.position()), edge)
}

pub fn voxel_volume(g: &VoxelGrid) -> f64 {
    g.volume()
}

/// Points per cubic meter of occupied volume.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DensityValue(pub f64);

/// Local density over global density; dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelativeDensity(pub f64);

/// `card(cluster) / V(cluster)`. Serves both the full-sequence (global) and
/// the windowed (local) density; only the point set differs.
pub fn density(cluster: &PointSet, edge: f64) -> Result<DensityValue, VoxelError> {
    let grid = voxelize(cluster, edge)?;
    density_of(cluster.len(), &grid)
}

/// Density from a precomputed occupancy.
pub fn density_of(count: usize, grid: &VoxelGrid) -> Result<DensityValue, VoxelError> {
    if count == 0 || grid.is_empty() {
        return Err(VoxelError::EmptyCluster);
    }
    Ok(DensityValue(count as f64 / grid.volume()))
}

/// `|a ∩ b| / |a ∪ b|` over occupied voxels.
pub fn voxel_iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64, VoxelError> {
    if a.edge.to_bits() != b.edge.to_bits() {
        return Err(VoxelError::EdgeMismatch(a.edge, b.edge));
    }
    if a.is_empty() && b.is_empty() {
        return Err(VoxelError::BothEmpty);
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let inter = small
        .occupied
        .iter()
        .filter(|v| large.occupied.contains(v))
        .count();
    let union = a.len() + b.len() - inter;
    Ok(inter as f64 / union as f64)
}

pub fn relative_density(
    local: DensityValue,
    global: DensityValue,
) -> Result<RelativeDensity, VoxelError> {
    if !(global.0 > 0.0) {
        return Err(VoxelError::ZeroGlobalDensity(global.0));
    }
    Ok(RelativeDensity(local.0 / global.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::Point;

    fn set(positions: &[[f64; 3]]) -> PointSet {
        positions
            .iter()
            .map(|p| Point {
                x: p[0],
                y: p[1],
                z: p[2],
                t: 0.0,
                frame_index: 0,
            })
            .collect()
    }

    fn grid(keys: &[VoxelKey], edge: f64) -> VoxelGrid {
        let mut g = VoxelGrid::empty(edge).unwrap();
        g.occupied.extend(keys.iter().copied());
        g
    }

    #[test]
    fn single_cell() {
        let g = voxelize(&set(&[[0.1, 0.2, 0.3]]), 0.5).unwrap();
        assert_eq!(g.occupied().iter().copied().collect::<Vec<_>>(), vec![(0, 0, 0)]);
        assert_eq!(voxel_volume(&g), 0.125);
    }

    #[test]
    fn negative_coordinates_floor() {
        let g = voxelize(&set(&[[-0.1, -0.5, 0.5]]), 0.5).unwrap();
        assert!(g.occupied().contains(&(-1, -1, 1)));
    }

    #[test]
    fn repeated_points_occupy_once() {
        let pts = vec![[1.3, -2.2, 7.9]; 100];
        assert_eq!(voxelize(&set(&pts), 0.5).unwrap().len(), 1);
    }

    #[test]
    fn volumes() {
        assert_eq!(voxel_volume(&VoxelGrid::empty(0.5).unwrap()), 0.0);
        let keys: Vec<_> = (0..8).map(|i| (i, 0, 0)).collect();
        assert_eq!(voxel_volume(&grid(&keys, 0.5)), 1.0);
    }

    #[test]
    fn densities() {
        assert_eq!(density(&set(&[[0.1, 0.2, 0.3]]), 0.5).unwrap(), DensityValue(8.0));
        assert_eq!(density(&set(&[[3.5, 3.5, 3.5]; 10]), 1.0).unwrap(), DensityValue(10.0));
        assert_eq!(density(&PointSet::default(), 1.0), Err(VoxelError::EmptyCluster));
    }

    #[test]
    fn iou_cases() {
        let a = grid(&[(0, 0, 0), (1, 0, 0)], 1.0);
        let b = grid(&[(1, 0, 0), (2, 0, 0)], 1.0);
        assert_eq!(voxel_iou(&a, &b).unwrap(), 1.0 / 3.0);
        assert_eq!(voxel_iou(&a, &a).unwrap(), 1.0);
        let c = grid(&[(5, 5, 5)], 1.0);
        assert_eq!(voxel_iou(&a, &c).unwrap(), 0.0);
        let empty = VoxelGrid::empty(1.0).unwrap();
        assert_eq!(voxel_iou(&a, &empty).unwrap(), 0.0);
        assert_eq!(voxel_iou(&empty, &empty), Err(VoxelError::BothEmpty));
        let d = grid(&[(0, 0, 0)], 0.5);
        assert!(matches!(voxel_iou(&a, &d), Err(VoxelError::EdgeMismatch(..))));
    }

    #[test]
    fn relative_density_cases() {
        assert_eq!(
            relative_density(DensityValue(8.0), DensityValue(2.0)).unwrap(),
            RelativeDensity(4.0)
        );
        assert_eq!(
            relative_density(DensityValue(3.7), DensityValue(3.7)).unwrap(),
            RelativeDensity(1.0)
        );
        assert!(relative_density(DensityValue(1.0), DensityValue(0.0)).is_err());
    }

    #[test]
    fn bad_edges() {
        for e in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(voxelize(&set(&[[0.0; 3]]), e).is_err());
        }
    }
}
