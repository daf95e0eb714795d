use std::path::Path;

use uavtrace_core::evaluation::{evaluate, EvalError, RmseReport};
use uavtrace_core::Trajectory;

use crate::error::{CliError, Result};
use crate::write_file;

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    Trajectory::load_csv(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn table(r: &RmseReport) -> String {
    format!(
        "axis       rmse_m\n\
         dx         {:.4}\n\
         dy         {:.4}\n\
         dz         {:.4}\n\
         aggregate  {:.4}\n\
         pairs      {} ({} dropped)\n",
        r.dx, r.dy, r.dz, r.aggregate, r.n_pairs, r.dropped
    )
}

pub fn run(pred: &Path, gt: &Path, max_dt: f64, out: &Path) -> Result<RmseReport> {
    let p = load_trajectory(pred)?;
    let g = load_trajectory(gt)?;
    let report = evaluate(&p, &g, max_dt).map_err(|e| match e {
        EvalError::NoOverlap { .. } => CliError::NoOverlap(e.to_string()),
        EvalError::InvalidMaxDt(_) => CliError::Config(e.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_file(out, &json)?;
    print!("{}", table(&report));
    Ok(report)
}
