//! Time-dependent checks against independent references.

use std::f64::consts::{E, PI};

use aflow_core::diagnostics::{sobolev_seminorm, DiagnosticsOptions, SupBoundAudit};
use aflow_core::integrator::{run, Model, SolverConfig};
use aflow_core::models::{generate_initial_data, InitialDataSpec, InitialKind};
use aflow_core::spectral::{helmholtz_apply, Grid, ModelParams, SpectralVectorField};

fn band(n: usize, l: f64, hi: f64, amplitude: f64, seed: u64) -> SpectralVectorField {
    let g = Grid::new(2, n, l).unwrap();
    let mut spec = InitialDataSpec::new(InitialKind::BandRandom, amplitude);
    spec.band = (0.0, hi);
    spec.seed = seed;
    generate_initial_data(&spec, &g).unwrap()
}

/// Radial profile `psi(r) = A R e b(r / R)` and derivatives, `b` the bump.
fn psi_derivs(r: f64, radius: f64, amp: f64) -> [f64; 3] {
    let s = r / radius;
    if s >= 1.0 {
        return [0.0; 3];
    }
    let q = 1.0 - s * s;
    let b = (-1.0 / q).exp();
    let g1 = -2.0 * s / (q * q);
    let g2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
    let c = amp * radius * E;
    [c * b, c * b * g1 / radius, c * b * (g1 * g1 + g2) / (radius * radius)]
}

/// `(||grad psi||^2, ||Lap psi||^2, ||grad Lap psi||^2)` by radial Simpson
/// quadrature; the last uses a centred difference of `Lap psi`.
fn radial_norms(radius: f64, amp: f64) -> [f64; 3] {
    let lap = |r: f64| {
        let [_, d1, d2] = psi_derivs(r, radius, amp);
        if r == 0.0 { 2.0 * d2 } else { d2 + d1 / r }
    };
    let m = 200_000;
    let h = radius / m as f64;
    let mut out = [0.0; 3];
    for i in 0..=m {
        let r = i as f64 * h;
        let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let [_, d1, _] = psi_derivs(r, radius, amp);
        let dl = if r < 2.0 * h { 0.0 } else { (lap(r + 1e-3 * h) - lap(r - 1e-3 * h)) / (2e-3 * h) };
        out[0] += w * d1 * d1 * r;
        out[1] += w * lap(r).powi(2) * r;
        out[2] += w * dl * dl * r;
    }
    out.map(|x| x * 2.0 * PI * h / 3.0)
}

#[test]
fn vortex_family_matches_radial_quadrature_and_scaling() {
    let l = 2.0 * PI;
    let g = Grid::new(2, 512, l).unwrap();
    let mut spec = InitialDataSpec::new(InitialKind::LocalizedVortex, 1.0);
    spec.vortex_radius = 0.04;
    let oracle = radial_norms(0.04 * l, 1.0);
    let mut norms = Vec::new();
    for eps in [0.8, 0.4, 0.2, 0.1] {
        spec.epsilon = eps;
        let u = generate_initial_data(&spec, &g).unwrap();
        let n0 = sobolev_seminorm(&u, 0);
        let n1 = sobolev_seminorm(&u, 1);
        let n2 = sobolev_seminorm(&u, 2);
        // ||grad^m u^eps||^2 = eps^{2m} ||grad^m u_0||^2 and
        // ||v||^2 = ||u||^2 + 2 a^2 ||grad u||^2 + a^4 ||Lap u||^2
        assert!((n0 / oracle[0] - 1.0).abs() < 0.02, "eps {eps}: {n0} vs {}", oracle[0]);
        assert!((n1 / (eps * eps * oracle[1]) - 1.0).abs() < 0.02, "eps {eps}");
        assert!((n2 / (eps.powi(4) * oracle[2]) - 1.0).abs() < 0.02, "eps {eps}");
        for alpha in [0.5, 1.0] {
            let v = helmholtz_apply(&u, alpha);
            let a2 = alpha * alpha;
            let expected = oracle[0] + 2.0 * a2 * eps * eps * oracle[1] + a2 * a2 * eps.powi(4) * oracle[2];
            assert!((v.norm_sq() / expected - 1.0).abs() < 0.02, "eps {eps} alpha {alpha}");
        }
        norms.push((n0.sqrt(), n1.sqrt()));
    }
    for w in norms.windows(2) {
        assert!((w[1].0 / w[0].0 - 1.0).abs() < 0.02);
        assert!((w[1].1 / w[0].1 - 0.5).abs() < 0.05 * 0.5);
    }
}

fn final_state(v0: &SpectralVectorField, p: ModelParams, dt: f64, t_end: f64) -> SpectralVectorField {
    let mut c = SolverConfig::fixed(p, dt, t_end, t_end);
    c.diagnostics = DiagnosticsOptions { time_derivative: false, orthogonality: false, ..Default::default() };
    run(v0, &c, Model::Vche).unwrap().final_state
}

#[test]
fn rk4_order_under_step_halving() {
    let v0 = band(32, 2.0 * PI, 5.0, 1.0, 17);
    let p = ModelParams::new(0.01, 0.5).unwrap();
    let s: Vec<_> = [0.1, 0.05, 0.025].iter().map(|&dt| final_state(&v0, p, dt, 0.5)).collect();
    let e1 = s[0].sub(&s[1]).unwrap().norm();
    let e2 = s[1].sub(&s[2]).unwrap().norm();
    let order = (e1 / e2).log2();
    assert!((3.7..=4.3).contains(&order), "order {order}");
}

#[test]
fn resolved_runs_agree_across_truncations() {
    let v32 = band(32, 2.0 * PI, 3.0, 0.5, 5);
    let v64 = band(64, 2.0 * PI, 3.0, 0.5, 5);
    // identical coefficients on the shared modes
    assert!((v32.norm_sq() - v64.norm_sq()).abs() < 1e-12 * v32.norm_sq());
    let p = ModelParams::new(0.05, 0.3).unwrap();
    let a = final_state(&v32, p, 0.01, 1.0).norm();
    let b = final_state(&v64, p, 0.01, 1.0).norm();
    assert!((a - b).abs() <= 1e-6 * b, "{a} vs {b}");
}

#[test]
fn spectral_sup_stays_below_running_bound() {
    let v0 = band(64, 4.0 * PI, 4.0, 1.0, 2);
    let p = ModelParams::new(0.02, 0.4).unwrap();
    let mut c = SolverConfig::fixed(p, 0.01, 2.0, 0.05);
    c.diagnostics = DiagnosticsOptions { time_derivative: false, orthogonality: false, ..Default::default() };
    let tr = run(&v0, &c, Model::Vche).unwrap();
    let g = v0.grid();
    let mut audit = SupBoundAudit::new(v0.spectrum_sup(), g.box_length(), 2);
    for r in &tr.records {
        let (sup, bound) = audit.push(r);
        assert!(sup <= bound * (1.0 + 1e-9), "t={} {sup} > {bound}", r.t);
    }
    assert!(audit.worst_ratio <= 1.0 + 1e-9);
}
