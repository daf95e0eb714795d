use std::path::Path;

use uavtrace_core::synthetic::{generate, presets, SceneConfig};
use uavtrace_core::ScanFormat;

use crate::error::{CliError, Result};
use crate::write_file;

pub const SCAN_CSV_FILE: &str = "scan.csv";
pub const SCAN_PCD_DIR: &str = "scan";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
/// The fully resolved scene config, seed included; feeding it back to
/// `synth` regenerates the same files.
pub const SCENE_FILE: &str = "scene.toml";

pub fn preset(name: &str, seed: u64) -> Result<SceneConfig> {
    match name {
        "s1" => Ok(presets::s1(seed)),
        "s2" => Ok(presets::s2(seed)),
        "randomized" => Ok(presets::randomized(seed)),
        other => Err(CliError::Config(format!(
            "unknown preset `{other}` (expected s1, s2 or randomized)"
        ))),
    }
}

pub fn load_scene_config(path: &Path) -> Result<SceneConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn run(config: &SceneConfig, out_dir: &Path, format: ScanFormat) -> Result<()> {
    let scene = generate(config).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::output(out_dir, e))?;
    match format {
        ScanFormat::Csv => write_file(&out_dir.join(SCAN_CSV_FILE), &scene.sequence.to_csv_string())?,
        ScanFormat::PcdSeries => {
            let dir = out_dir.join(SCAN_PCD_DIR);
            scene
                .sequence
                .save_pcd_series(&dir)
                .map_err(|e| CliError::Input(e.to_string()))?;
        }
    }
    write_file(&out_dir.join(GROUND_TRUTH_FILE), &scene.ground_truth.to_csv_string())?;
    let resolved = toml::to_string(config).map_err(|e| CliError::Config(e.to_string()))?;
    write_file(&out_dir.join(SCENE_FILE), &resolved)?;
    println!(
        "{}: {} frames, {} points ({} UAV returns)",
        out_dir.display(),
        scene.sequence.frame_count(),
        scene.sequence.point_count(),
        scene.oracle.uav_point_count()
    );
    Ok(())
}
