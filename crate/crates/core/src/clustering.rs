//! DBSCAN over superimposed point sets.
//!
//! Neighborhoods are closed Euclidean balls in (x, y, z); time is not a
//! clustering dimension. A point is core when its ball holds at least
//! `min_pts` points, itself included. Clusters are the connected components
//! of core points, plus border points, each border point joining the
//! cluster of its lowest-index core neighbor. Cluster ids are numbered in
//! order of each cluster's lowest member index, so the labeling does not
//! depend on traversal order or on how neighbor queries are scheduled.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pointcloud::{CloudError, Point, PointSet, ScanSequence, WindowSpec};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("cannot cluster an empty point set")]
    EmptyInput,
    #[error("invalid DBSCAN parameters: {0}")]
    InvalidParams(String),
    #[error("unknown cluster id {id} (labeling has {count} clusters)")]
    UnknownClusterId { id: usize, count: usize },
    #[error("labeling covers {labels} points but the point set has {points}")]
    LengthMismatch { labels: usize, points: usize },
    #[error(transparent)]
    Window(#[from] CloudError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DbscanParams {
    /// Neighborhood radius in meters.
    pub eps: f64,
    /// Minimum closed-ball population for a core point, query point included.
    pub min_pts: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        Self {
            eps: 1.0,
            min_pts: 4,
        }
    }
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self, ClusterError> {
        let p = Self { eps, min_pts };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(ClusterError::InvalidParams(format!(
                "eps must be positive and finite, got {}",
                self.eps
            )));
        }
        if self.min_pts < 1 {
            return Err(ClusterError::InvalidParams("min_pts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-point cluster labels; `None` is noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLabeling {
    labels: Vec<Option<usize>>,
    cluster_count: usize,
    source_window: WindowSpec,
    params: DbscanParams,
}

impl ClusterLabeling {
    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    /// Number of clusters, `K`.
    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn source_window(&self) -> WindowSpec {
        self.source_window
    }

    pub fn params(&self) -> DbscanParams {
        self.params
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// Member count of every cluster, indexed by id.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cluster_count];
        for k in self.labels.iter().flatten() {
            sizes[*k] += 1;
        }
        sizes
    }

    /// Indices (into the clustered point set) of cluster `k`'s members.
    pub fn member_indices(&self, k: usize) -> Result<Vec<usize>, ClusterError> {
        self.check_id(k)?;
        Ok(self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(k))
            .map(|(i, _)| i)
            .collect())
    }

    fn check_id(&self, k: usize) -> Result<(), ClusterError> {
        if k >= self.cluster_count {
            return Err(ClusterError::UnknownClusterId {
                id: k,
                count: self.cluster_count,
            });
        }
        Ok(())
    }

    /// The points of `ps` labeled `k`.
    pub fn members(&self, ps: &PointSet, k: usize) -> Result<PointSet, ClusterError> {
        self.check_id(k)?;
        if ps.len() != self.labels.len() {
            return Err(ClusterError::LengthMismatch {
                labels: self.labels.len(),
                points: ps.len(),
            });
        }
        Ok(ps
            .points()
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| **l == Some(k))
            .map(|(p, _)| *p)
            .collect())
    }

    /// Renumber raw labels by lowest member index.
    pub fn from_raw_labels(
        raw: &[Option<usize>],
        source_window: WindowSpec,
        params: DbscanParams,
    ) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                l.map(|c| {
                    let next = remap.len();
                    *remap.entry(c).or_insert(next)
                })
            })
            .collect();
        Self {
            labels,
            cluster_count: remap.len(),
            source_window,
            params,
        }
    }
}

type CellKey = (i64, i64, i64);

/// Hash grid whose cells are small enough that any two points sharing a
/// cell lie within `eps` of each other.
struct NeighborGrid<'a> {
    points: &'a [Point],
    side: f64,
    eps2: f64,
    /// Cell offsets that can hold a point within `eps`.
    reach: i64,
    /// Member indices per cell, ascending.
    cells: HashMap<CellKey, Vec<usize>>,
}

impl<'a> NeighborGrid<'a> {
    fn new(points: &'a [Point], eps: f64) -> Self {
        // Shrunk a little so rounding cannot push a same-cell pair past eps.
        let side = eps / 3f64.sqrt() * (1.0 - 1e-9);
        let mut cells: HashMap<CellKey, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(cell_of(p.position(), side)).or_default().push(i);
        }
        Self {
            points,
            side,
            eps2: eps * eps,
            reach: (eps / side).ceil() as i64,
            cells,
        }
    }

    fn cell(&self, i: usize) -> CellKey {
        cell_of(self.points[i].position(), self.side)
    }

    fn within(&self, i: usize, j: usize) -> bool {
        squared_distance(self.points[i].position(), self.points[j].position()) <= self.eps2
    }

    /// Occupied cells within reach of `c`, `c` itself included.
    fn nearby_cells(&self, c: CellKey) -> impl Iterator<Item = (CellKey, &Vec<usize>)> + '_ {
        let r = self.reach;
        (-r..=r).flat_map(move |dx| {
            (-r..=r).flat_map(move |dy| {
                (-r..=r).filter_map(move |dz| {
                    let k = (c.0 + dx, c.1 + dy, c.2 + dz);
                    self.cells.get(&k).map(|v| (k, v))
                })
            })
        })
    }

    /// Closed-ball population of point `i`, counting stops at `cap`.
    fn count_neighbors(&self, i: usize, cap: usize) -> usize {
        let mut count = 0;
        for (_, bucket) in self.nearby_cells(self.cell(i)) {
            for &j in bucket {
                if self.within(i, j) {
                    count += 1;
                    if count >= cap {
                        return count;
                    }
                }
            }
        }
        count
    }
}

fn cell_of(p: [f64; 3], side: f64) -> CellKey {
    (
        (p[0] / side).floor() as i64,
        (p[1] / side).floor() as i64,
        (p[2] / side).floor() as i64,
    )
}

#[inline]
pub fn squared_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Cluster `ps`. The labeling's source window spans the frames present in
/// `ps`; use [`cluster_window`] to record an exact window.
pub fn dbscan(ps: &PointSet, params: DbscanParams) -> Result<ClusterLabeling, ClusterError> {
    let (lo, hi) = ps
        .points()
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), p| (lo.min(p.frame_index), hi.max(p.frame_index)));
    if ps.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    dbscan_with_window(ps, params, WindowSpec::new(lo, hi))
}

/// Superimpose frames `w` of `seq` and cluster the result.
pub fn cluster_window(
    seq: &ScanSequence,
    w: WindowSpec,
    params: DbscanParams,
) -> Result<(PointSet, ClusterLabeling), ClusterError> {
    let ps = seq.superimpose(w)?;
    let labeling = dbscan_with_window(&ps, params, w)?;
    Ok((ps, labeling))
}

fn dbscan_with_window(
    ps: &PointSet,
    params: DbscanParams,
    source_window: WindowSpec,
) -> Result<ClusterLabeling, ClusterError> {
    params.validate()?;
    if ps.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    let points = ps.points();
    let n = points.len();
    let grid = NeighborGrid::new(points, params.eps);

    let core: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|i| {
            grid.cells[&grid.cell(i)].len() >= params.min_pts
                || grid.count_neighbors(i, params.min_pts) >= params.min_pts
        })
        .collect();

    // Core points of one cell are mutually linked. Two cells are linked
    // when some pair of their core points is within eps.
    let core_cells: HashMap<CellKey, Vec<usize>> = grid
        .cells
        .iter()
        .filter_map(|(k, members)| {
            let c: Vec<usize> = members.iter().copied().filter(|&i| core[i]).collect();
            (!c.is_empty()).then_some((*k, c))
        })
        .collect();
    let mut keys: Vec<CellKey> = core_cells.keys().copied().collect();
    keys.sort_unstable();
    let cell_links: Vec<(usize, usize)> = keys
        .par_iter()
        .flat_map_iter(|k| {
            let a = &core_cells[k];
            let r = grid.reach;
            let mut out = Vec::new();
            for dx in -r..=r {
                for dy in -r..=r {
                    for dz in -r..=r {
                        let other = (k.0 + dx, k.1 + dy, k.2 + dz);
                        if other <= *k {
                            continue;
                        }
                        let Some(b) = core_cells.get(&other) else {
                            continue;
                        };
                        if a.iter().any(|&i| b.iter().any(|&j| grid.within(i, j))) {
                            out.push((a[0], b[0]));
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut sets = DisjointSet::new(n);
    for members in core_cells.values() {
        for &j in &members[1..] {
            sets.union(members[0], j);
        }
    }
    for (i, j) in cell_links {
        sets.union(i, j);
    }

    // A border point takes the component of its lowest-index core neighbor.
    let lowest_core: Vec<Option<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if core[i] {
                return None;
            }
            grid.nearby_cells(grid.cell(i))
                .filter_map(|(k, _)| core_cells.get(&k))
                .filter_map(|cores| cores.iter().copied().find(|&j| grid.within(i, j)))
                .min()
        })
        .collect();
    let raw: Vec<Option<usize>> = (0..n)
        .map(|i| {
            if core[i] {
                Some(sets.find(i))
            } else {
                lowest_core[i].map(|c| sets.find(c))
            }
        })
        .collect();
    Ok(ClusterLabeling::from_raw_labels(&raw, source_window, params))
}

pub fn cluster_members(
    cl: &ClusterLabeling,
    ps: &PointSet,
    k: usize,
) -> Result<PointSet, ClusterError> {
    cl.members(ps, k)
}
