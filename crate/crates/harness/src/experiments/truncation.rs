//! Galerkin truncation study: one grid, several retained-mode radii.

use std::path::Path;

use aflow_core::diagnostics::filtered_energy;
use aflow_core::integrator::{run_observed, Control, Model, Observer};
use aflow_core::spectral::{dealias, SpectralVectorField};
use aflow_core::FlowError;

use super::{fan_out, fmt, Both};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::{write_table, Check, Recorder, Verdict};

struct MaxEnergy {
    alpha: f64,
    max: f64,
}

impl Observer for MaxEnergy {
    fn on_step(&mut self, _t: f64, state: &SpectralVectorField) -> aflow_core::Result<Control> {
        self.max = self.max.max(filtered_energy(state, self.alpha));
        Ok(Control::Continue)
    }
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    let section = cfg.truncation.as_ref().expect("validated");
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    let n = grid.points_per_dim();
    let mut ms = section.truncations.clone();
    ms.sort_unstable();
    ms.dedup();
    if ms.len() < 2 || ms.iter().any(|m| *m < 4 || *m > n) {
        return Err(HarnessError::Config(format!(
            "[truncation] truncations needs at least two values in [4, {n}]"
        )));
    }
    let v0 = cfg.initial_field(&grid, params.alpha)?;
    let fraction = |m: usize| params.dealias_fraction * m as f64 / n as f64;
    let kept = dealias(&v0, fraction(ms[0]));
    if kept.sub(&v0)?.norm() > 1e-14 * v0.norm() {
        return Err(FlowError::IncompatibleInitialData(format!(
            "initial data extend beyond the smallest truncation m = {}",
            ms[0]
        ))
        .into());
    }
    let e0 = filtered_energy(&v0, params.alpha);

    let results = fan_out(grid.dim(), ms.clone(), |m| -> Result<(SpectralVectorField, f64)> {
        let mut solver = cfg.solver_config()?;
        solver.params.dealias_fraction = fraction(m);
        let mut rec = Recorder::to_file(&out.join(format!("truncation_{m}.csv")))?;
        let mut energy = MaxEnergy { alpha: params.alpha, max: e0 };
        let s = run_observed(&v0, &solver, Model::Vche, &mut Both(&mut rec, &mut energy))?;
        for r in rec.finish()? {
            energy.max = energy.max.max(r.filtered_energy);
        }
        Ok((s.final_state, energy.max))
    });
    let mut finals = Vec::new();
    for r in results {
        finals.push(r?);
    }

    let mut rows = Vec::new();
    let mut diffs = Vec::new();
    for i in 0..ms.len() - 1 {
        let d = finals[i].0.sub(&finals[i + 1].0)?.norm();
        diffs.push(d);
        rows.push(vec![format!("{}-{}", ms[i], ms[i + 1]), fmt(d), fmt(finals[i].1)]);
    }
    rows.push(vec![format!("{}", ms[ms.len() - 1]), fmt(f64::NAN), fmt(finals[ms.len() - 1].1)]);
    write_table(&out.join("summary.csv"), &["pair", "diff_l2_at_t_end", "max_filtered_energy_of_first"], &rows)?;

    let worst_excess = finals.iter().map(|(_, e)| e - e0).fold(f64::NEG_INFINITY, f64::max);
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
    let checks = vec![
        Check::new(
            "max_t E_m(t) - E(0) over truncations",
            worst_excess,
            format!("<= {}", section.energy_slack),
            worst_excess <= section.energy_slack,
        ),
        Check::new(
            "pairwise differences decreasing in m",
            diffs.last().copied().unwrap_or(f64::NAN),
            "each difference below the previous",
            decreasing,
        ),
    ];
    let notes = vec![format!("E(0) = {e0}"), format!("differences: {diffs:?}")];
    Ok(Verdict::new("truncation_study", checks, notes))
}
