//! Exact and near-exact property checks: the spectral identities, the
//! orthogonality of the quadratic term, the Taylor-Green regression and the
//! discrete energy balance.

use std::f64::consts::PI;

use aflow_core::diagnostics::{bilinear_orthogonality_residual, filter_identity_residual, filtered_energy, sobolev_seminorm};
use aflow_core::integrator::{run_observed, Control, Model, Observer, SolverConfig};
use aflow_core::models::{generate_initial_data, taylor_green, InitialDataSpec, InitialKind};
use aflow_core::spectral::operators::dealias_cutoff;
use aflow_core::spectral::{
    helmholtz_filter, leray_project, transform_backward, transform_forward, Grid, ModelParams, SpectralVectorField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fit::fit_line;
use crate::output::Check;

pub const IDENTITY_FIELDS: usize = 100;
pub const ORTHOGONALITY_FIELDS: usize = 50;

fn worst(name: &str, value: f64, limit: f64) -> Check {
    Check::new(name, value, format!("<= {limit:e}"), value <= limit)
}

/// Parseval, round trip, Leray and filter identities on random fields.
pub fn identity_suite(fields: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parseval: f64 = 0.0;
    let mut round_trip: f64 = 0.0;
    let mut idempotence: f64 = 0.0;
    let mut adjoint: f64 = 0.0;
    let mut identity: f64 = 0.0;
    let mut bound_excess = f64::NEG_INFINITY;
    for i in 0..fields {
        let dim = 2 + i % 2;
        let n = if dim == 2 { 32 } else { 16 };
        let grid = Grid::new(dim, n, rng.random_range(1.0..10.0))?;
        let mut sample = || -> Vec<Vec<f64>> {
            (0..dim).map(|_| (0..grid.physical_len()).map(|_| rng.random::<f64>() - 0.5).collect()).collect()
        };
        let s = sample();
        let t = sample();
        let f = transform_forward(&s, &grid)?;
        let g = transform_forward(&t, &grid)?;

        let phys: f64 = s.iter().flatten().map(|x| x * x).sum::<f64>() * grid.cell_volume();
        parseval = parseval.max((phys - f.norm_sq()).abs() / phys);
        let back = transform_backward(&f)?;
        let err: f64 = back.iter().flatten().zip(s.iter().flatten()).map(|(a, b)| (a - b).powi(2)).sum();
        let size: f64 = s.iter().flatten().map(|x| x * x).sum();
        round_trip = round_trip.max((err / size).sqrt());

        let pf = leray_project(&f);
        idempotence = idempotence.max(leray_project(&pf).sub(&pf)?.norm() / f.norm());
        let lhs = pf.inner(&g)?;
        let rhs = f.inner(&leray_project(&g))?;
        adjoint = adjoint.max((lhs - rhs).abs() / (f.norm() * g.norm()));

        let alpha = rng.random_range(0.0..2.0);
        let u = helmholtz_filter(&f, alpha);
        identity = identity.max(filter_identity_residual(&f, &u, alpha));
        let gap = u.sub(&f)?.norm();
        let bound = 0.5 * alpha * sobolev_seminorm(&f, 1).sqrt();
        bound_excess = bound_excess.max(gap - bound * (1.0 + 1e-12));
    }
    Ok(vec![
        worst("Parseval relative defect", parseval, 1e-12),
        worst("transform round trip relative error", round_trip, 1e-12),
        worst("Leray idempotence defect", idempotence, 1e-12),
        worst("Leray self-adjointness defect", adjoint, 1e-12),
        worst("filter norm identity residual", identity, 1e-12),
        Check::new(
            "max ||u - v|| - (alpha/2)||grad v||",
            bound_excess,
            "<= 0",
            bound_excess <= 0.0,
        ),
    ])
}

/// Random divergence-free fields inside the retained modes of one grid.
fn solenoidal_fields(dim: usize, count: usize, seed: u64) -> Result<(Grid, Vec<SpectralVectorField>)> {
    let grid = Grid::new(dim, if dim == 2 { 32 } else { 16 }, 2.0 * PI)?;
    let cutoff = dealias_cutoff(grid.points_per_dim(), 2.0 / 3.0) as f64;
    let fields = (0..count)
        .map(|i| {
            let mut spec = InitialDataSpec::new(InitialKind::BandRandom, 1.0);
            spec.band = (0.5, cutoff);
            spec.seed = seed + i as u64;
            generate_initial_data(&spec, &grid)
        })
        .collect::<aflow_core::Result<Vec<_>>>()?;
    Ok((grid, fields))
}

pub fn orthogonality_suite(fields: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for dim in [2, 3] {
        let (_, vs) = solenoidal_fields(dim, fields, seed)?;
        let mut res: f64 = 0.0;
        for v in &vs {
            let params = ModelParams::new(0.01, rng.random_range(0.0..1.5))?;
            res = res.max(bilinear_orthogonality_residual(v, &params)?);
        }
        checks.push(worst(&format!("{dim}D orthogonality residual"), res, 1e-10));
    }
    Ok(checks)
}

pub const TG_ALPHAS: [f64; 3] = [0.0, 0.5, 1.0];

fn tg_grid() -> Result<Grid> {
    Ok(Grid::new(2, 64, 2.0 * PI)?)
}

/// Taylor-Green plus a small band-limited perturbation, so the nonlinear
/// term is active and the step error is visible.
pub fn perturbed_taylor_green(grid: &Grid, amplitude: f64, seed: u64) -> Result<SpectralVectorField> {
    let tg = taylor_green(1.0, grid)?;
    let mut spec = InitialDataSpec::new(InitialKind::BandRandom, amplitude);
    spec.band = (1.0, 4.0);
    spec.seed = seed;
    let p = generate_initial_data(&spec, grid)?;
    Ok(leray_project(&tg.add_scaled(1.0, &p)?))
}

fn final_state(v0: &SpectralVectorField, params: ModelParams, dt: f64, t_end: f64) -> Result<SpectralVectorField> {
    let mut cfg = SolverConfig::fixed(params, dt, t_end, t_end);
    cfg.diagnostics.time_derivative = false;
    cfg.diagnostics.orthogonality = false;
    Ok(run_observed(v0, &cfg, Model::Vche, &mut NoOp)?.final_state)
}

struct NoOp;
impl Observer for NoOp {}

/// Filtered energy of Taylor-Green against `E(0) e^{-4 nu t}` and the
/// observed order of the stepper under dt halving.
pub fn taylor_green_regression() -> Result<Vec<Check>> {
    let grid = tg_grid()?;
    let nu = 0.1;
    let v0 = taylor_green(1.0, &grid)?;
    let mut rel: f64 = 0.0;
    for alpha in TG_ALPHAS {
        let params = ModelParams::new(nu, alpha)?;
        let v = final_state(&v0, params, 1e-3, 1.0)?;
        let e0 = filtered_energy(&v0, alpha);
        let exact = e0 * (-4.0 * nu).exp();
        rel = rel.max((filtered_energy(&v, alpha) - exact).abs() / exact);
    }

    let v0 = perturbed_taylor_green(&grid, 0.5, 7)?;
    let params = ModelParams::new(nu, 0.5)?;
    let dts = [0.1, 0.05, 0.025, 0.0125];
    let states = dts.iter().map(|dt| final_state(&v0, params, *dt, 1.0)).collect::<Result<Vec<_>>>()?;
    let reference = final_state(&v0, params, dts[3] / 4.0, 1.0)?;
    let errs = states.iter().map(|s| Ok(s.sub(&reference)?.norm())).collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = dts[..3].iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errs[..3].iter().map(|e| e.ln()).collect();
    let (order, _, _) = fit_line(&xs, &ys);
    Ok(vec![
        worst("Taylor-Green filtered energy relative error at t=1", rel, 1e-6),
        Check::new("observed RK4 order", order, "in [3.7, 4.3]", (3.7..=4.3).contains(&order)),
    ])
}

/// Accumulates `2 nu int (||grad u||^2 + a^2 ||Lap u||^2)` by the
/// trapezoid rule over steps and tracks the worst balance defect.
struct Balance {
    nu: f64,
    alpha: f64,
    e0: f64,
    last: (f64, f64),
    integral: f64,
    worst: f64,
}

impl Balance {
    fn dissipation(&self, v: &SpectralVectorField) -> f64 {
        let a2 = self.alpha * self.alpha;
        2.0 * self.nu * v.weighted_norm_sq(|k2| k2 / (1.0 + a2 * k2))
    }
}

impl Observer for Balance {
    fn on_step(&mut self, t: f64, state: &SpectralVectorField) -> aflow_core::Result<Control> {
        let d = self.dissipation(state);
        self.integral += 0.5 * (t - self.last.0) * (d + self.last.1);
        self.last = (t, d);
        let defect = (filtered_energy(state, self.alpha) + self.integral - self.e0).abs() / self.e0;
        self.worst = self.worst.max(defect);
        Ok(Control::Continue)
    }
}

pub fn energy_balance() -> Result<Vec<Check>> {
    let grid = Grid::new(2, 64, 2.0 * PI)?;
    let (nu, alpha) = (0.01, 0.5);
    let mut spec = InitialDataSpec::new(InitialKind::BandRandom, 1.0);
    spec.band = (1.0, 8.0);
    spec.seed = 11;
    let v0 = generate_initial_data(&spec, &grid)?;
    let params = ModelParams::new(nu, alpha)?;
    let mut b = Balance { nu, alpha, e0: filtered_energy(&v0, alpha), last: (0.0, 0.0), integral: 0.0, worst: 0.0 };
    b.last.1 = b.dissipation(&v0);
    let mut cfg = SolverConfig::fixed(params, 1e-3, 5.0, 5.0);
    cfg.diagnostics.time_derivative = false;
    cfg.diagnostics.orthogonality = false;
    run_observed(&v0, &cfg, Model::Vche, &mut b)?;
    Ok(vec![worst("energy balance relative residual over [0, 5]", b.worst, 1e-5)])
}
