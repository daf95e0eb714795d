mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use uavtrace_core::voxel::density;
use uavtrace_core::{dbscan, voxel_iou, voxelize, DbscanParams};

fn library_labels(pts: &[[f64; 3]], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let labeling = dbscan(&point_set(pts), DbscanParams::new(eps, min_pts).unwrap()).unwrap();
    canonicalize(labeling.labels())
}

#[test]
fn dbscan_matches_reference_on_random_instances() {
    let mut r = rng(11);
    for case in 0..50 {
        let n = r.random_range(1..=500);
        let pts = random_instance(&mut r, n);
        let eps = [0.25, 0.5, 0.75, 1.0, 1.5][case % 5];
        let min_pts = r.random_range(1..=8);
        assert_eq!(
            library_labels(&pts, eps, min_pts),
            reference_dbscan(&pts, eps, min_pts),
            "case {case}: n={n} eps={eps} min_pts={min_pts}"
        );
    }
}

#[test]
fn dbscan_matches_reference_on_exact_lattice_distances() {
    // Unit lattice points: neighbors sit at exactly eps = 1.
    let mut pts = Vec::new();
    for i in 0..6 {
        for j in 0..4 {
            pts.push([i as f64, j as f64, 0.0]);
        }
    }
    pts.push([10.0, 0.0, 0.0]);
    pts.push([11.0, 0.0, 0.0]);
    for min_pts in 1..=6 {
        assert_eq!(
            library_labels(&pts, 1.0, min_pts),
            reference_dbscan(&pts, 1.0, min_pts),
            "min_pts={min_pts}"
        );
    }
}

#[test]
fn voxel_statistics_match_enumeration() {
    let mut r = rng(12);
    for case in 0..100 {
        let n = r.random_range(1..=200);
        let a = random_instance(&mut r, n);
        let m = r.random_range(1..=200);
        let b = random_instance(&mut r, m);
        let edge = [0.25, 0.5, 1.0][case % 3];
        let grid = voxelize(&point_set(&a), edge).unwrap();
        let got: BTreeSet<_> = grid.occupied().iter().copied().collect();
        assert_eq!(got, reference_voxels(&a, edge), "case {case}");
        assert_eq!(
            density(&point_set(&a), edge).unwrap().0,
            reference_density(&a, edge),
            "case {case}"
        );
        let gb = voxelize(&point_set(&b), edge).unwrap();
        assert_eq!(voxel_iou(&grid, &gb).unwrap(), reference_iou(&a, &b, edge), "case {case}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dbscan_agrees_with_reference(
        pts in prop::collection::vec(prop::array::uniform3(-40i32..40), 1..120),
        eps_q in 1u32..12,
        min_pts in 1usize..7,
    ) {
        let pts: Vec<[f64; 3]> = pts.iter().map(|p| p.map(|v| v as f64 / 8.0)).collect();
        let eps = eps_q as f64 / 8.0;
        prop_assert_eq!(library_labels(&pts, eps, min_pts), reference_dbscan(&pts, eps, min_pts));
    }
}
