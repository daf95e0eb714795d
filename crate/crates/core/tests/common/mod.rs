//! Brute-force reference implementations and random instance builders
//! shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uavtrace_core::{Point, PointSet};

pub fn point_set(positions: &[[f64; 3]]) -> PointSet {
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

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Number clusters in order of first appearance.
pub fn canonicalize(labels: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            l.map(|c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
        })
        .collect()
}

/// O(n²) DBSCAN: closed balls, self counted, border points join their
/// lowest-index core neighbor.
pub fn reference_dbscan(pts: &[[f64; 3]], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = pts.len();
    let eps2 = eps * eps;
    let near = |i: usize, j: usize| dist2(pts[i], pts[j]) <= eps2;
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts)
        .collect();
    let mut comp = vec![None; n];
    let mut next = 0;
    for s in 0..n {
        if !core[s] || comp[s].is_some() {
            continue;
        }
        comp[s] = Some(next);
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if core[j] && comp[j].is_none() && near(i, j) {
                    comp[j] = Some(next);
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    let labels: Vec<Option<usize>> = (0..n)
        .map(|i| {
            if core[i] {
                comp[i]
            } else {
                (0..n).find(|&j| core[j] && near(i, j)).and_then(|j| comp[j])
            }
        })
        .collect();
    canonicalize(&labels)
}

/// Occupied cells, each coordinate located by scanning lattice intervals
/// `k * edge <= v < (k + 1) * edge` over the bounding range.
pub fn reference_voxels(pts: &[[f64; 3]], edge: f64) -> BTreeSet<(i64, i64, i64)> {
    let mut out = BTreeSet::new();
    if pts.is_empty() {
        return out;
    }
    let lo: [i64; 3] = std::array::from_fn(|a| {
        (pts.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min) / edge) as i64 - 2
    });
    let hi: [i64; 3] = std::array::from_fn(|a| {
        (pts.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max) / edge) as i64 + 2
    });
    let interval = |v: f64, a: usize| {
        (lo[a]..=hi[a])
            .find(|&k| (k as f64) * edge <= v && v < ((k + 1) as f64) * edge)
            .expect("bounding range covers every point")
    };
    for p in pts {
        out.insert((interval(p[0], 0), interval(p[1], 1), interval(p[2], 2)));
    }
    out
}

pub fn reference_density(pts: &[[f64; 3]], edge: f64) -> f64 {
    pts.len() as f64 / (reference_voxels(pts, edge).len() as f64 * edge * edge * edge)
}

pub fn reference_iou(a: &[[f64; 3]], b: &[[f64; 3]], edge: f64) -> f64 {
    let va = reference_voxels(a, edge);
    let vb = reference_voxels(b, edge);
    let inter = va.intersection(&vb).count();
    let union = va.union(&vb).count();
    inter as f64 / union as f64
}

/// Box-shaped blobs plus uniform noise, snapped to a 1/64 m grid so that
/// exact-distance ties and duplicate points actually occur.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    let blobs: Vec<[f64; 3]> = (0..rng.random_range(1..=5))
        .map(|_| std::array::from_fn(|_| rng.random_range(-10.0..10.0)))
        .collect();
    let snap = |v: f64| (v * 64.0).round() / 64.0;
    (0..n)
        .map(|_| {
            if rng.random_bool(0.2) {
                std::array::from_fn(|_| snap(rng.random_range(-12.0..12.0)))
            } else {
                let c = blobs[rng.random_range(0..blobs.len())];
                let spread = rng.random_range(0.2..1.5);
                std::array::from_fn(|a| snap(c[a] + rng.random_range(-spread..spread)))
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
