//! Run configuration: a TOML document, overridden field by field from the
//! command line, and the `--sweep` grid built on top of it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uavtrace_core::pipeline::DetectionParams;
use uavtrace_core::ScanFormat;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    pub path: Option<PathBuf>,
    /// Inferred from the path when absent: a directory is a PCD series.
    pub format: Option<ScanFormat>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    /// Seconds a ground-truth sample may lie outside the prediction's time
    /// domain and still be paired.
    pub max_dt: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { max_dt: 0.1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub output: OutputConfig,
    pub detection: DetectionParams,
    pub evaluation: EvaluationConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{source_name}: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.detection
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let dt = self.evaluation.max_dt;
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(CliError::Config(format!("evaluation.max_dt must be >= 0, got {dt}")));
        }
        Ok(())
    }
}

/// Parameters that `--sweep` can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKey {
    Lambda,
    Eps,
    VoxelEdge,
    WindowLen,
}

impl SweepKey {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(Self::Lambda),
            "eps" => Ok(Self::Eps),
            "voxel_edge" => Ok(Self::VoxelEdge),
            "window_len" => Ok(Self::WindowLen),
            other => Err(CliError::Config(format!(
                "unknown sweep key `{other}` (expected lambda, eps, voxel_edge or window_len)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Lambda => "lambda",
            Self::Eps => "eps",
            Self::VoxelEdge => "voxel_edge",
            Self::WindowLen => "window_len",
        }
    }

    fn apply(self, p: &mut DetectionParams, value: &str) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| {
            CliError::Config(format!("sweep value `{value}` for {}: {e}", self.name()))
        };
        match self {
            Self::Lambda => p.scoring.lambda = value.parse().map_err(|e| bad(&e))?,
            Self::Eps => p.dbscan.eps = value.parse().map_err(|e| bad(&e))?,
            Self::VoxelEdge => p.voxel_edge = value.parse().map_err(|e| bad(&e))?,
            Self::WindowLen => p.scoring.window_len = value.parse().map_err(|e| bad(&e))?,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: SweepKey,
    pub values: Vec<String>,
}

impl SweepAxis {
    /// Parse `key=v1,v2,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("sweep `{spec}` is not of the form key=v1,v2")))?;
        let key = SweepKey::parse(key.trim())?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if values.iter().any(|v| v.is_empty()) {
            return Err(CliError::Config(format!("sweep `{spec}` has an empty value")));
        }
        let mut probe = DetectionParams::default();
        for v in &values {
            key.apply(&mut probe, v)?;
        }
        Ok(Self { key, values })
    }
}

/// One point of a sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub settings: Vec<(SweepKey, String)>,
    pub params: DetectionParams,
}

impl SweepPoint {
    /// Directory name such as `lambda=0.5_eps=1.5`.
    pub fn dir_name(&self) -> String {
        self.settings
            .iter()
            .map(|(k, v)| format!("{}={v}", k.name()))
            .collect::<Vec<_>>()
            .join("_")
    }
}

/// Cartesian product of the sweep axes applied to `base`, first axis
/// varying slowest.
pub fn expand_sweep(base: &DetectionParams, axes: &[SweepAxis]) -> Result<Vec<SweepPoint>> {
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.key == a.key) {
            return Err(CliError::Config(format!("sweep key {} given twice", a.key.name())));
        }
    }
    let mut points = vec![SweepPoint {
        settings: Vec::new(),
        params: *base,
    }];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for v in &axis.values {
                let mut q = p.clone();
                axis.key.apply(&mut q.params, v)?;
                q.settings.push((axis.key, v.clone()));
                next.push(q);
            }
        }
        points = next;
    }
    for p in &points {
        p.params
            .validate()
            .map_err(|e| CliError::Config(format!("sweep point {}: {e}", p.dir_name())))?;
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        let c = PipelineConfig::parse("", "empty").unwrap();
        assert_eq!(c, PipelineConfig::default());
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let c = PipelineConfig::parse(
            "[detection]\nvoxel_edge = 0.25\n[detection.dbscan]\neps = 1.5\n[detection.scoring]\nlambda = 2.0\n",
            "t",
        )
        .unwrap();
        assert_eq!(c.detection.voxel_edge, 0.25);
        assert_eq!(c.detection.dbscan.eps, 1.5);
        assert_eq!(c.detection.dbscan.min_pts, 4);
        assert_eq!(c.detection.scoring.lambda, 2.0);
        assert_eq!(c.detection.scoring.window_len, 10);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for doc in [
            "colour = 1",
            "[detection]\nvoxel = 1.0",
            "[detection.scoring]\nlamda = 1.0",
            "[input]\nfile = \"x\"",
        ] {
            assert!(matches!(PipelineConfig::parse(doc, "t"), Err(CliError::Config(_))), "{doc}");
        }
    }

    #[test]
    fn window_len_one_fails_validation() {
        let c = PipelineConfig::parse("[detection.scoring]\nwindow_len = 1\n", "t").unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn sweep_grid() {
        let axes = [
            SweepAxis::parse("lambda=0.5,1,2").unwrap(),
            SweepAxis::parse("eps=0.8,1.2").unwrap(),
        ];
        let grid = expand_sweep(&DetectionParams::default(), &axes).unwrap();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[0].dir_name(), "lambda=0.5_eps=0.8");
        assert_eq!(grid[5].dir_name(), "lambda=2_eps=1.2");
        assert_eq!(grid[5].params.scoring.lambda, 2.0);
        assert_eq!(grid[5].params.dbscan.eps, 1.2);
    }

    #[test]
    fn bad_sweeps() {
        assert!(SweepAxis::parse("gamma=1").is_err());
        assert!(SweepAxis::parse("lambda").is_err());
        assert!(SweepAxis::parse("window_len=2.5").is_err());
        assert!(SweepAxis::parse("eps=1,,2").is_err());
        let twice = [SweepAxis::parse("eps=1").unwrap(), SweepAxis::parse("eps=2").unwrap()];
        assert!(expand_sweep(&DetectionParams::default(), &twice).is_err());
        let invalid = [SweepAxis::parse("window_len=1").unwrap()];
        assert!(expand_sweep(&DetectionParams::default(), &invalid).is_err());
    }
}
