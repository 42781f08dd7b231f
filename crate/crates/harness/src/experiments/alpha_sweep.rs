//! Convergence of VCHE solutions to the NSE solution as `alpha -> 0`.

use std::path::Path;

use aflow_core::diagnostics::{sobolev_seminorm, DiagnosticsRecord};
use aflow_core::integrator::{run_observed, Control, Model, Observer};
use aflow_core::spectral::{helmholtz_filter, SpectralVectorField};
use aflow_core::FlowError;

use super::{fan_out, fmt, Both};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::fit::fit_line;
use crate::output::{write_table, Check, Recorder, Verdict};

#[derive(Default)]
struct States(Vec<SpectralVectorField>);

impl Observer for States {
    fn on_sample(&mut self, _r: &DiagnosticsRecord, state: &SpectralVectorField) -> aflow_core::Result<Control> {
        self.0.push(state.clone());
        Ok(Control::Continue)
    }
}

fn run_states(
    cfg: &ExperimentConfig,
    v0: &SpectralVectorField,
    alpha: f64,
    model: Model,
    path: &Path,
) -> Result<Vec<SpectralVectorField>> {
    let mut solver = cfg.solver_config()?;
    solver.params.alpha = alpha;
    let mut rec = Recorder::to_file(path)?;
    let mut states = States::default();
    run_observed(v0, &solver, model, &mut Both(&mut rec, &mut states))?;
    rec.finish()?;
    Ok(states.0)
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    let section = cfg.alpha_sweep.as_ref().expect("validated");
    let grid = cfg.grid()?;
    let mut alphas = section.alphas.clone();
    alphas.sort_by(|a, b| b.total_cmp(a));
    alphas.dedup();
    if alphas.iter().filter(|a| **a > 0.0).count() < 2 || alphas.iter().any(|a| *a < 0.0) {
        return Err(HarnessError::Config("[alpha_sweep] alphas needs at least two positive values".into()));
    }
    // one momentum field shared by every run
    let v0 = cfg.initial_field(&grid, 0.0)?;

    let nse = match run_states(cfg, &v0, 0.0, Model::Nse, &out.join("nse.csv")) {
        Err(HarnessError::Flow(FlowError::BlowUp { last_valid_time })) => {
            return Err(HarnessError::Fit(format!(
                "NSE reference run blew up after t = {last_valid_time}; shorten the horizon or reduce the data"
            )));
        }
        other => other?,
    };
    let results = fan_out(grid.dim(), alphas.clone(), |a| {
        run_states(cfg, &v0, a, Model::Vche, &out.join(format!("vche_alpha_{a}.csv")))
    });

    let grad_v0 = sobolev_seminorm(&v0, 1).sqrt();
    let mut errs = Vec::new();
    let mut rows = Vec::new();
    let mut filter_ok = true;
    for (a, states) in alphas.iter().zip(results) {
        let states = states?;
        let err = states
            .iter()
            .zip(&nse)
            .map(|(x, w)| x.sub(w).map(|d| d.norm()))
            .collect::<aflow_core::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let gap = helmholtz_filter(&v0, *a).sub(&v0)?.norm();
        let bound = 0.5 * a * grad_v0;
        filter_ok &= gap <= bound * (1.0 + 1e-12);
        rows.push(vec![fmt(*a), fmt(err), fmt(gap), fmt(bound)]);
        errs.push((*a, err));
    }
    write_table(&out.join("summary.csv"), &["alpha", "max_err_l2", "filter_gap", "filter_bound"], &rows)?;

    let positive: Vec<(f64, f64)> = errs.iter().copied().filter(|(a, _)| *a > 0.0).collect();
    let decreasing = positive.windows(2).all(|w| w[1].1 < w[0].1);
    let (xs, ys): (Vec<f64>, Vec<f64>) = positive.iter().map(|(a, e)| (a.ln(), e.ln())).unzip();
    let (order, _, r2) = fit_line(&xs, &ys);
    let mut checks = vec![
        Check::new(
            "err(alpha) strictly decreasing as alpha decreases",
            positive.last().map_or(f64::NAN, |p| p.1),
            "each err below the previous",
            decreasing,
        ),
        Check::new("fitted order d log err / d log alpha", order, format!(">= {}", section.min_order), order >= section.min_order),
        Check::new("static filter gap within (alpha/2)||grad v0||", 0.0, "all alphas", filter_ok),
    ];
    if let Some((_, e)) = errs.iter().find(|(a, _)| *a == 0.0) {
        checks.push(Check::new("err(alpha = 0)", *e, "= 0", *e == 0.0));
    }
    let notes = vec![format!("order fit r^2 = {r2}")];
    Ok(Verdict::new("alpha_sweep", checks, notes))
}
