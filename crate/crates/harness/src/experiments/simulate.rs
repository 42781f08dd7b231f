//! A single run with trajectory audits.

use std::path::Path;

use aflow_core::integrator::{run_observed, CheckpointWriter, Observer};
use aflow_core::spectral::SpectralVectorField;

use super::Both;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Check, Recorder, Verdict};

struct Checkpoints(CheckpointWriter);

impl Observer for Checkpoints {
    fn on_checkpoint(&mut self, t: f64, state: &SpectralVectorField) -> aflow_core::Result<()> {
        self.0.write(t, state)
    }
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    let model = cfg.model.equation.model();
    let v0 = cfg.initial_field(&grid, model.effective_params(&params).alpha)?;
    let solver = cfg.solver_config()?;
    let mut rec = Recorder::to_file(&out.join("run.csv"))?;
    let mut ckpt = Checkpoints(CheckpointWriter { dir: out.to_path_buf(), prefix: "checkpoint".into(), written: Vec::new() });
    let summary = run_observed(&v0, &solver, model, &mut Both(&mut rec, &mut ckpt))?;
    let records = rec.finish()?;

    let e0 = records[0].filtered_energy;
    let mut worst_increase: f64 = 0.0;
    for w in records.windows(2) {
        worst_increase = worst_increase.max((w[1].filtered_energy - w[0].filtered_energy) / e0.max(f64::MIN_POSITIVE));
    }
    let max_filter = records.iter().map(|r| r.filter_identity_residual).fold(0.0, f64::max);
    let mut checks = vec![
        Check::new("reached t_end", summary.final_time, format!("= {}", solver.t_end), summary.final_time == solver.t_end),
        Check::new("filtered energy increase / E(0)", worst_increase, "<= 1e-10", worst_increase <= 1e-10),
        Check::new("max filter identity residual", max_filter, "<= 1e-12", max_filter <= 1e-12),
    ];
    if cfg.diagnostics.orthogonality {
        let max_orth = records.iter().map(|r| r.orthogonality_residual).fold(0.0, f64::max);
        checks.push(Check::new("max orthogonality residual", max_orth, "<= 1e-10", max_orth <= 1e-10));
    }
    let notes = vec![
        format!("steps: {}", summary.steps),
        format!("checkpoints: {}", ckpt.0.written.len()),
    ];
    Ok(Verdict::new("simulate", checks, notes))
}
