//! Non-uniform decay: the rescaled vortex family keeps its energy for
//! longer as `eps` decreases.

use std::path::Path;

use aflow_core::diagnostics::{filtered_energy, sobolev_seminorm};
use aflow_core::integrator::{run_observed, Control, Model, Observer};
use aflow_core::spectral::{helmholtz_apply, SpectralVectorField};

use super::{fan_out, fmt, Both};
use crate::config::{ExperimentConfig, ProfileKind, Target};
use crate::error::{HarnessError, Result};
use crate::output::{write_table, Check, Recorder, Verdict};

/// Tracks the filtered energy step by step to locate `T_half` and the
/// energy at a reference time by linear interpolation.
struct HalfLife {
    alpha: f64,
    e0: f64,
    last: (f64, f64),
    t_ref: Option<f64>,
    t_half: Option<f64>,
    e_at_ref: Option<f64>,
}

impl HalfLife {
    fn new(e0: f64, alpha: f64, t_ref: Option<f64>) -> Self {
        Self { alpha, e0, last: (0.0, e0), t_ref, t_half: None, e_at_ref: None }
    }

    fn done(&self) -> bool {
        self.t_half.is_some() && (self.t_ref.is_none() || self.e_at_ref.is_some())
    }
}

fn interpolate(a: (f64, f64), b: (f64, f64), t: f64) -> f64 {
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

impl Observer for HalfLife {
    fn on_step(&mut self, t: f64, state: &SpectralVectorField) -> aflow_core::Result<Control> {
        let e = filtered_energy(state, self.alpha);
        let prev = self.last;
        if self.t_half.is_none() && e < 0.5 * self.e0 {
            let target = 0.5 * self.e0;
            self.t_half = Some(prev.0 + (t - prev.0) * (prev.1 - target) / (prev.1 - e));
        }
        if let Some(tr) = self.t_ref {
            if self.e_at_ref.is_none() && t >= tr {
                self.e_at_ref = Some(interpolate(prev, (t, e), tr));
            }
        }
        self.last = (t, e);
        Ok(if self.done() { Control::Stop } else { Control::Continue })
    }
}

struct EpsRun {
    eps: f64,
    u_norms: [f64; 3],
    v0_l2sq: f64,
    e0: f64,
    t_half: Option<f64>,
    e_at_ref: Option<f64>,
}

fn run_one(
    cfg: &ExperimentConfig,
    out: &Path,
    eps: f64,
    t_ref: Option<f64>,
) -> Result<EpsRun> {
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    let mut spec = cfg.initial_spec();
    spec.epsilon = eps;
    let u0 = aflow_core::models::generate_initial_data(&spec, &grid)?;
    let u_norms = [0, 1, 2].map(|m| sobolev_seminorm(&u0, m));
    let v0 = helmholtz_apply(&u0, params.alpha);
    drop(u0);
    let e0 = filtered_energy(&v0, params.alpha);
    let mut solver = cfg.solver_config()?;
    solver.t_end = cfg.counterexample.as_ref().expect("validated").t_max;
    let mut rec = Recorder::to_file(&out.join(format!("eps_{eps}.csv")))?;
    let mut half = HalfLife::new(e0, params.alpha, t_ref);
    run_observed(&v0, &solver, Model::Vche, &mut Both(&mut rec, &mut half))?;
    rec.finish()?;
    Ok(EpsRun {
        eps,
        u_norms,
        v0_l2sq: v0.norm_sq(),
        e0,
        t_half: half.t_half,
        e_at_ref: match t_ref {
            Some(_) => half.e_at_ref,
            None => half.t_half.map(|_| 0.5 * e0),
        },
    })
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    let section = cfg.counterexample.as_ref().expect("validated");
    if cfg.initial.kind != ProfileKind::LocalizedVortex || cfg.initial.target != Target::U {
        return Err(HarnessError::Config(
            "counterexample needs [initial] kind = \"localized_vortex\" and target = \"u\"".into(),
        ));
    }
    let mut eps = section.epsilons.clone();
    if eps.len() < 2 || eps.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(HarnessError::Config("[counterexample] epsilons needs at least two positive values".into()));
    }
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let alpha = cfg.params()?.alpha;

    let first = run_one(cfg, out, eps[0], None)?;
    let t_ref = first.t_half.ok_or_else(|| {
        HarnessError::Fit(format!("eps = {} did not halve its energy before t_max = {}", eps[0], section.t_max))
    })?;
    let rest = fan_out(cfg.grid.dim, eps[1..].to_vec(), |e| run_one(cfg, out, e, Some(t_ref)));
    let mut runs = vec![first];
    for r in rest {
        runs.push(r?);
    }

    // reference seminorms of the unscaled profile from the best-resolved member
    let smallest = runs.last().expect("two runs");
    let reference: Vec<f64> = (0..3).map(|m| smallest.u_norms[m] / smallest.eps.powi(2 * m as i32)).collect();
    let a2 = alpha * alpha;
    let mut rows = Vec::new();
    let mut identity_worst: f64 = 0.0;
    for r in &runs {
        let predicted = reference[0] + 2.0 * a2 * r.eps.powi(2) * reference[1] + a2 * a2 * r.eps.powi(4) * reference[2];
        identity_worst = identity_worst.max((r.v0_l2sq / predicted - 1.0).abs());
        rows.push(vec![
            fmt(r.eps),
            fmt(r.u_norms[0].sqrt()),
            fmt(r.u_norms[1].sqrt() / r.eps),
            fmt(r.u_norms[2].sqrt() / (r.eps * r.eps)),
            fmt(r.v0_l2sq),
            fmt(predicted),
            fmt(r.e0),
            fmt(r.t_half.unwrap_or(f64::NAN)),
            fmt(r.e_at_ref.map_or(f64::NAN, |e| e / r.e0)),
        ]);
    }
    write_table(
        &out.join("summary.csv"),
        &[
            "epsilon",
            "u0_l2",
            "grad_u0_l2_over_eps",
            "lap_u0_l2_over_eps2",
            "v0_l2sq",
            "v0_l2sq_predicted",
            "filtered_energy_0",
            "t_half",
            "energy_ratio_at_t_ref",
        ],
        &rows,
    )?;

    let l2: Vec<f64> = runs.iter().map(|r| r.u_norms[0].sqrt()).collect();
    let (lo, hi) = l2.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    let spread = hi / lo - 1.0;
    let halves: Vec<f64> = runs.iter().map(|r| r.t_half.unwrap_or(f64::NAN)).collect();
    let min_growth = halves.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
    let increasing = halves.windows(2).all(|w| w[1] > w[0]);
    let last = runs.last().expect("two runs");
    let ratio = last.e_at_ref.map_or(f64::NAN, |e| e / last.e0);
    let tol = section.norm_tolerance;
    let checks = vec![
        Check::new("||u0^eps|| spread across eps", spread, format!("<= {tol}"), spread <= tol),
        Check::new(
            "min T_half(eps_next) / T_half(eps)",
            min_growth,
            "> 1 for every consecutive pair",
            increasing && min_growth > 1.0,
        ),
        Check::new(
            format!("E(T_ref; eps={}) / E(0)", last.eps),
            ratio,
            format!(">= {}", section.energy_fraction),
            ratio >= section.energy_fraction,
        ),
        Check::new(
            "max |v0 norm identity ratio - 1|",
            identity_worst,
            format!("<= {tol}"),
            identity_worst <= tol,
        ),
    ];
    let notes = vec![format!("T_ref = T_half(eps={}) = {t_ref}", eps[0])];
    Ok(Verdict::new("counterexample", checks, notes))
}
