//! The five experiment drivers. Each writes its artifacts into an output
//! directory and returns a [`Verdict`].

pub mod alpha_sweep;
pub mod counterexample;
pub mod decay;
pub mod simulate;
pub mod truncation;

use std::path::Path;

use aflow_core::diagnostics::DiagnosticsRecord;
use aflow_core::integrator::{run_observed, Model, Observer, RunSummary, SolverConfig};
use aflow_core::spectral::SpectralVectorField;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::output::{Recorder, Verdict};

pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Verdict> {
    std::fs::create_dir_all(out_dir)?;
    let verdict = match cfg.experiment {
        ExperimentKind::Simulate => simulate::run(cfg, out_dir)?,
        ExperimentKind::Decay => decay::run(cfg, out_dir)?,
        ExperimentKind::Counterexample => counterexample::run(cfg, out_dir)?,
        ExperimentKind::AlphaSweep => alpha_sweep::run(cfg, out_dir)?,
        ExperimentKind::TruncationStudy => truncation::run(cfg, out_dir)?,
    };
    verdict.write(out_dir)?;
    Ok(verdict)
}

/// Runs with samples streamed to `path`, returning the records.
pub(crate) fn run_recorded(
    v0: &SpectralVectorField,
    solver: &SolverConfig,
    model: Model,
    path: &Path,
) -> Result<(Vec<DiagnosticsRecord>, RunSummary)> {
    let mut rec = Recorder::to_file(path)?;
    let summary = run_observed(v0, solver, model, &mut rec)?;
    Ok((rec.finish()?, summary))
}

/// Runs `f` over `items`, concurrently for 2D grids. 3D runs go one at a
/// time to bound peak memory.
pub(crate) fn fan_out<I, T, F>(dim: usize, items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    if dim == 2 {
        items.into_par_iter().map(f).collect()
    } else {
        items.into_iter().map(f).collect()
    }
}

/// Forwards every callback to two observers.
pub(crate) struct Both<'a, A: Observer, B: Observer>(pub &'a mut A, pub &'a mut B);

impl<A: Observer, B: Observer> Observer for Both<'_, A, B> {
    fn on_sample(
        &mut self,
        record: &DiagnosticsRecord,
        state: &SpectralVectorField,
    ) -> aflow_core::Result<aflow_core::integrator::Control> {
        use aflow_core::integrator::Control;
        let a = self.0.on_sample(record, state)?;
        let b = self.1.on_sample(record, state)?;
        Ok(if a == Control::Stop || b == Control::Stop { Control::Stop } else { Control::Continue })
    }

    fn on_checkpoint(&mut self, t: f64, state: &SpectralVectorField) -> aflow_core::Result<()> {
        self.0.on_checkpoint(t, state)?;
        self.1.on_checkpoint(t, state)
    }

    fn on_step(&mut self, t: f64, state: &SpectralVectorField) -> aflow_core::Result<aflow_core::integrator::Control> {
        use aflow_core::integrator::Control;
        let a = self.0.on_step(t, state)?;
        let b = self.1.on_step(t, state)?;
        Ok(if a == Control::Stop || b == Control::Stop { Control::Stop } else { Control::Continue })
    }
}

pub(crate) fn fmt(x: f64) -> String {
    x.to_string()
}
