use uavtrace_core::evaluation::evaluate;
use uavtrace_core::pipeline::{detect, score_scene};
use uavtrace_core::pointcloud::parse_scan_csv;
use uavtrace_core::synthetic::{generate, presets, PointTag, StaticBox};
use uavtrace_core::trajectory::Trajectory;
use uavtrace_core::{load_sequence, DetectionParams, ScanFormat, ScanSequence, WindowSpec};

#[test]
fn generation_is_reproducible_per_seed() {
    let a = generate(&presets::s1(3)).unwrap();
    let b = generate(&presets::s1(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.sequence.to_csv_string(), b.sequence.to_csv_string());
    let c = generate(&presets::s1(4)).unwrap();
    assert_ne!(a.sequence, c.sequence);
}

#[test]
fn ten_frame_export_reads_back_identically() {
    let scene = generate(&presets::randomized(5)).unwrap();
    let first: Vec<(f64, Vec<[f64; 3]>)> = scene.sequence.frames()[..10]
        .iter()
        .map(|f| (f.timestamp(), f.points().iter().map(|p| p.position()).collect()))
        .collect();
    let seq = ScanSequence::from_frames(first).unwrap();
    let back = parse_scan_csv(&seq.to_csv_string(), "export").unwrap();
    assert_eq!(back, seq);

    let dir = tempfile::tempdir().unwrap();
    seq.save_pcd_series(dir.path()).unwrap();
    assert_eq!(load_sequence(dir.path(), ScanFormat::PcdSeries).unwrap(), seq);

    let gt = Trajectory::parse_csv(&scene.ground_truth.to_csv_string(), "gt").unwrap();
    assert_eq!(gt, scene.ground_truth);
}

#[test]
fn s1_selects_the_uav_and_tracks_it() {
    let scene = generate(&presets::s1(0)).unwrap();
    let params = DetectionParams::default();
    let d = detect(&scene.sequence, &params, None).unwrap();
    assert_eq!(scene.oracle.uav_cluster(d.labeling()), Some(d.selection.cluster_id));
    assert!(!d.selection.low_confidence);
    let report = evaluate(&d.trajectory, &scene.ground_truth, 0.1).unwrap();
    assert!(report.aggregate < 0.5 * params.voxel_edge, "{report:?}");

    // The wall accumulates density over the sequence, so its windows sit
    // well below the global density; the mover's do not.
    let walls = scene.oracle.clusters_dominated_by(d.labeling(), PointTag::Static);
    assert_eq!(walls.len(), 1);
    let wall = &d.scores()[walls[0]];
    let mover = &d.scores()[d.selection.cluster_id];
    for w in &wall.windows {
        assert!(w.relative_density < 0.5, "{w:?}");
    }
    let mean = |s: &uavtrace_core::ScoreBreakdown| {
        s.windows.iter().map(|w| w.relative_density).sum::<f64>() / s.windows.len() as f64
    };
    assert!(mean(mover) > 2.0 * mean(wall));
    assert!(mover.psi_iou > wall.psi_iou);
}

#[test]
fn lone_static_wall_is_low_confidence() {
    let scene = generate(&presets::s2(0)).unwrap();
    let d = detect(&scene.sequence, &DetectionParams::default(), None).unwrap();
    let s = &d.scores()[d.selection.cluster_id];
    assert_eq!(d.labeling().cluster_count(), 1);
    assert_eq!(s.psi_iou, 0.0);
    assert!(s.windows.iter().all(|w| w.relative_density < 1.0));
    assert!(d.selection.low_confidence, "{:?}", d.selection);
}

#[test]
fn twin_walls_are_a_low_confidence_tie() {
    let mut cfg = presets::s2(1);
    let wall = |y: f64| StaticBox {
        center: [30.0, y, 2.25],
        dimensions: [0.5, 4.0, 4.0],
        points_per_frame: 500.0,
    };
    cfg.static_structures = vec![wall(-10.25), wall(10.25)];
    let scene = generate(&cfg).unwrap();
    let s = score_scene(&scene.sequence, &DetectionParams::default()).unwrap();
    assert_eq!(s.labeling.cluster_count(), 2);
    let sel = uavtrace_core::select_target(&s.scores, 0.05).unwrap();
    assert!(sel.low_confidence, "{sel:?}");
}

#[test]
fn window_restriction_partitions_the_superposition() {
    let seq = generate(&presets::s1(2)).unwrap().sequence;
    let w = WindowSpec::new(3, 9);
    let all = seq.superimpose(w).unwrap();
    let per_frame: usize = w.frames().map(|n| all.restrict_to_frame(n).len()).sum();
    assert_eq!(per_frame, all.len());
}
