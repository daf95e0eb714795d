use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use uavtrace_core::numfmt::format_sig9;
use uavtrace_core::pipeline::{fit_target, score_scene, DetectionParams};
use uavtrace_core::pointcloud::SCAN_CSV_HEADER;
use uavtrace_core::scoring::{ScoreBreakdown, Selection};
use uavtrace_core::{PointSet, ScanFormat, ScanSequence};

use crate::config::{expand_sweep, SweepAxis, SweepPoint};
use crate::error::{CliError, Result, EXIT_LOW_CONFIDENCE, EXIT_OK};
use crate::write_file;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SCORES_FILE: &str = "scores.json";
pub const RUN_FILE: &str = "run.json";
pub const TARGET_POINTS_FILE: &str = "target_points.csv";
pub const SWEEP_FILE: &str = "sweep.json";

#[derive(Debug, Clone)]
pub struct DetectJob {
    pub input: PathBuf,
    pub format: ScanFormat,
    pub out_dir: PathBuf,
    pub params: DetectionParams,
    pub config_file: Option<PathBuf>,
    pub sweep: Vec<SweepAxis>,
}

#[derive(Serialize)]
struct ScoreAudit<'a> {
    selection: &'a Selection,
    clusters: &'a [ScoreBreakdown],
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

pub fn infer_format(path: &Path) -> ScanFormat {
    if path.is_dir() {
        ScanFormat::PcdSeries
    } else {
        ScanFormat::Csv
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of a file, or of a directory's files (sorted by name, each
/// contributing its name and contents).
pub fn digest(path: &Path) -> Result<String> {
    let read = |p: &Path| {
        std::fs::read(p).map_err(|e| CliError::Input(format!("cannot read {}: {e}", p.display())))
    };
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut names: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| CliError::Input(format!("cannot list {}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        names.sort();
        for p in names {
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
            let body = read(&p)?;
            h.update((body.len() as u64).to_le_bytes());
            h.update(&body);
        }
    } else {
        h.update(read(path)?);
    }
    Ok(hex(&h.finalize()))
}

fn points_csv(ps: &PointSet) -> String {
    let mut out = String::from(SCAN_CSV_HEADER);
    out.push('\n');
    for p in ps.points() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.frame_index,
            format_sig9(p.t),
            format_sig9(p.x),
            format_sig9(p.y),
            format_sig9(p.z)
        ));
    }
    out
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("audit records serialize");
    s.push('\n');
    s
}

/// Outcome of one parameter set.
struct RunSummary {
    exit: u8,
    selection: Option<Selection>,
    error: Option<String>,
}

fn run_one(
    job: &DetectJob,
    seq: &ScanSequence,
    input_digest: &FileDigest,
    config_digest: Option<&FileDigest>,
    point: &SweepPoint,
    out_dir: &Path,
    load_ms: f64,
) -> Result<RunSummary> {
    let started = Instant::now();
    let params = &point.params;
    let scene = score_scene(seq, params)?;
    let scored = started.elapsed();
    let (n_points, n_clusters, noise) = (
        scene.points.len(),
        scene.labeling.cluster_count(),
        scene.labeling.noise_count(),
    );
    let detection = fit_target(seq, scene, params, None)?;
    let fitted = started.elapsed();

    std::fs::create_dir_all(out_dir).map_err(|e| CliError::output(out_dir, e))?;
    write_file(&out_dir.join(TRAJECTORY_FILE), &detection.trajectory.to_csv_string())?;
    write_file(
        &out_dir.join(TARGET_POINTS_FILE),
        &points_csv(&detection.target_points()),
    )?;
    write_file(
        &out_dir.join(SCORES_FILE),
        &to_json(&ScoreAudit {
            selection: &detection.selection,
            clusters: detection.scores(),
        }),
    )?;

    let sel = &detection.selection;
    let exit = if sel.low_confidence {
        EXIT_LOW_CONFIDENCE
    } else {
        EXIT_OK
    };
    let run = json!({
        "tool": "uavtrace",
        "version": env!("CARGO_PKG_VERSION"),
        "command": "detect",
        "input": {
            "path": input_digest.path,
            "format": job.format,
            "sha256": input_digest.sha256,
        },
        "config_file": config_digest,
        "params": params,
        "sweep": point.settings.iter().map(|(k, v)| (k.name(), v)).collect::<std::collections::BTreeMap<_, _>>(),
        "frames": seq.frame_count(),
        "points": n_points,
        "clusters": n_clusters,
        "noise_points": noise,
        "selection": sel,
        "trajectory": {
            "control_points": detection.control.len(),
            "spline_degree": detection.spline.degree(),
            "samples": detection.trajectory.len(),
            "clamped_queries": detection.clamped.len(),
        },
        "exit_code": exit,
        "timings_ms": {
            "load": load_ms,
            "cluster_and_score": scored.as_secs_f64() * 1e3,
            "fit": (fitted - scored).as_secs_f64() * 1e3,
        },
    });
    write_file(&out_dir.join(RUN_FILE), &to_json(&run))?;

    if sel.low_confidence {
        eprintln!(
            "warning: low-confidence selection in {} (cluster {}, confidence {:.4})",
            out_dir.display(),
            sel.cluster_id,
            sel.confidence
        );
    }
    println!(
        "{}: cluster {} of {n_clusters}, confidence {:.4}, {} trajectory samples",
        out_dir.display(),
        sel.cluster_id,
        sel.confidence,
        detection.trajectory.len()
    );
    Ok(RunSummary {
        exit,
        selection: Some(detection.selection),
        error: None,
    })
}

pub fn run(job: &DetectJob) -> Result<u8> {
    let grid = expand_sweep(&job.params, &job.sweep)?;
    let started = Instant::now();
    let seq = ScanSequence::load(&job.input, job.format).map_err(|e| CliError::Input(e.to_string()))?;
    let load_ms = started.elapsed().as_secs_f64() * 1e3;
    let input_digest = FileDigest {
        path: job.input.display().to_string(),
        sha256: digest(&job.input)?,
    };
    let config_digest = match &job.config_file {
        Some(p) => Some(FileDigest {
            path: p.display().to_string(),
            sha256: digest(p).map_err(|e| CliError::Config(e.to_string()))?,
        }),
        None => None,
    };

    if job.sweep.is_empty() {
        let s = run_one(job, &seq, &input_digest, config_digest.as_ref(), &grid[0], &job.out_dir, load_ms)?;
        return Ok(s.exit);
    }

    // Every combination gets its own directory; a failing combination is
    // recorded and does not stop the others.
    let mut worst: u8 = EXIT_OK;
    let mut entries = Vec::new();
    for point in &grid {
        let dir = job.out_dir.join(point.dir_name());
        let summary = match run_one(job, &seq, &input_digest, config_digest.as_ref(), point, &dir, load_ms) {
            Ok(s) => s,
            Err(e @ CliError::Output { .. }) => return Err(e),
            Err(e) => {
                eprintln!("error: {}: {e}", dir.display());
                RunSummary {
                    exit: e.exit_code(),
                    selection: None,
                    error: Some(e.to_string()),
                }
            }
        };
        worst = worst.max(summary.exit);
        entries.push(json!({
            "dir": point.dir_name(),
            "settings": point.settings.iter().map(|(k, v)| (k.name(), v)).collect::<std::collections::BTreeMap<_, _>>(),
            "exit_code": summary.exit,
            "selection": summary.selection,
            "error": summary.error,
        }));
    }
    write_file(
        &job.out_dir.join(SWEEP_FILE),
        &to_json(&json!({ "input": input_digest, "runs": entries })),
    )?;
    Ok(worst)
}
