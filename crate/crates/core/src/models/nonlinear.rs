//! Pseudospectral evaluation of the quadratic terms.
//!
//! Products are formed in physical space from dealiased inputs, transformed
//! back, truncated by the dealiasing mask and Leray-projected.

use num_complex::Complex64;

use crate::error::{FlowError, Result};
use crate::spectral::field::{backward_scalar, forward_scalar, SpectralScalar};
use crate::spectral::operators::{
    apply_mask, curl_2d, helmholtz_filter, laplacian, leray_project_in_place, mul_ik,
    retained_mask,
};
use crate::spectral::{Grid, ModelParams, SpectralVectorField};

/// Divergence defect tolerated on inputs to the nonlinear operators.
pub const INPUT_DIVERGENCE_TOLERANCE: f64 = 1e-10;

/// Which algebraic route evaluates `u.grad v + sum_j v_j grad u_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonlinearForm {
    /// Direct evaluation of both products.
    Advective,
    /// `-u x curl v`; the gradient `grad(u.v)` is dropped since the Leray
    /// projection annihilates it.
    Rotational,
}

fn check_input(v: &SpectralVectorField) -> Result<()> {
    if v.is_divergence_free() {
        return Ok(());
    }
    let defect = v.divergence_defect();
    if defect > INPUT_DIVERGENCE_TOLERANCE {
        return Err(FlowError::NotDivergenceFree(defect));
    }
    Ok(())
}

fn phys(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
    backward_scalar(grid, coeffs.to_vec())
}

fn physical_components(field: &SpectralVectorField) -> Vec<Vec<f64>> {
    field
        .components()
        .iter()
        .map(|c| phys(field.grid(), c))
        .collect()
}

/// Forward-transforms products, dealiases and optionally projects. Each
/// physical array is released as soon as it is transformed.
fn finish(grid: &Grid, products: Vec<Vec<f64>>, fraction: f64, project: bool) -> SpectralVectorField {
    let mask = retained_mask(grid, fraction);
    let comps = products
        .into_iter()
        .map(|p| {
            let mut c = forward_scalar(grid, &p).expect("product arrays match the grid");
            apply_mask(&mut c, &mask);
            c
        })
        .collect();
    let mut out = SpectralVectorField::from_parts(grid, comps, false);
    if project {
        leray_project_in_place(&mut out);
    }
    out
}

/// Physical samples of one component of `u = helmholtz_filter(v, alpha)`.
fn filtered_phys(v: &SpectralVectorField, alpha: f64, c: usize) -> Vec<f64> {
    let grid = v.grid();
    if alpha == 0.0 {
        return phys(grid, v.component(c));
    }
    let a2 = alpha * alpha;
    let coeffs = v
        .component(c)
        .iter()
        .zip(grid.k_squared())
        .map(|(z, k2)| z / (1.0 + a2 * k2))
        .collect();
    backward_scalar(grid, coeffs)
}

/// Physical samples of component `c` of `curl v` in 3D.
fn curl_phys(v: &SpectralVectorField, c: usize) -> Vec<f64> {
    let grid = v.grid();
    let (a, b) = ((c + 1) % 3, (c + 2) % 3);
    let mut w = mul_ik(grid, v.component(b), a);
    for (x, y) in w.iter_mut().zip(mul_ik(grid, v.component(a), b)) {
        *x -= y;
    }
    backward_scalar(grid, w)
}

/// Dealiased, unprojected `u.grad v + sum_j v_j grad u_j` with
/// `u = helmholtz_filter(v, alpha)`.
pub fn advective_terms(v: &SpectralVectorField, params: &ModelParams) -> SpectralVectorField {
    let grid = v.grid();
    let dim = grid.dim();
    let u = helmholtz_filter(v, params.alpha);
    let u_phys = physical_components(&u);
    let v_phys = if params.alpha == 0.0 {
        u_phys.clone()
    } else {
        physical_components(v)
    };
    let len = grid.physical_len();
    let mut products = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut acc = vec![0.0; len];
        for i in 0..dim {
            // u_i d_i v_j
            let d = phys(grid, &mul_ik(grid, v.component(j), i));
            for ((a, ui), di) in acc.iter_mut().zip(&u_phys[i]).zip(&d) {
                *a += ui * di;
            }
            // v_i d_j u_i
            let d = phys(grid, &mul_ik(grid, u.component(i), j));
            for ((a, vi), di) in acc.iter_mut().zip(&v_phys[i]).zip(&d) {
                *a += vi * di;
            }
        }
        products.push(acc);
    }
    finish(grid, products, params.dealias_fraction, false)
}

/// `-u x curl v` (dealiased, unprojected); equals the advective terms up to
/// the gradient `grad(u.v)`.
pub fn rotational_terms(v: &SpectralVectorField, params: &ModelParams) -> SpectralVectorField {
    let grid = v.grid();
    let dim = grid.dim();
    let u_phys: Vec<Vec<f64>> = (0..dim).map(|c| filtered_phys(v, params.alpha, c)).collect();
    let len = grid.physical_len();
    let products = if dim == 2 {
        let w = phys(grid, &curl_2d(v).coeffs);
        // -u x (w e_z) = (-u_y w, u_x w)
        let mut px = vec![0.0; len];
        let mut py = vec![0.0; len];
        for p in 0..len {
            px[p] = -u_phys[1][p] * w[p];
            py[p] = u_phys[0][p] * w[p];
        }
        vec![px, py]
    } else {
        let w: Vec<Vec<f64>> = (0..3).map(|c| curl_phys(v, c)).collect();
        let mut out = vec![vec![0.0; len]; 3];
        for p in 0..len {
            let (ux, uy, uz) = (u_phys[0][p], u_phys[1][p], u_phys[2][p]);
            let (wx, wy, wz) = (w[0][p], w[1][p], w[2][p]);
            out[0][p] = -(uy * wz - uz * wy);
            out[1][p] = -(uz * wx - ux * wz);
            out[2][p] = -(ux * wy - uy * wx);
        }
        out
    };
    drop(u_phys);
    finish(grid, products, params.dealias_fraction, false)
}

/// `-P[dealias(u.grad v + sum_j v_j grad u_j)]`, evaluated in the requested
/// form. Both forms agree to round-off on dealiased input.
pub fn vche_nonlinear_with(
    v: &SpectralVectorField,
    params: &ModelParams,
    form: NonlinearForm,
) -> Result<SpectralVectorField> {
    check_input(v)?;
    Ok(nonlinear_unchecked(v, params, form))
}

pub(crate) fn nonlinear_unchecked(
    v: &SpectralVectorField,
    params: &ModelParams,
    form: NonlinearForm,
) -> SpectralVectorField {
    let mut terms = match form {
        NonlinearForm::Advective => advective_terms(v, params),
        NonlinearForm::Rotational => rotational_terms(v, params),
    };
    leray_project_in_place(&mut terms);
    terms.scaled(-1.0)
}

/// Nonlinear part of the VCHE right-hand side in advective form.
pub fn vche_nonlinear(v: &SpectralVectorField, params: &ModelParams) -> Result<SpectralVectorField> {
    vche_nonlinear_with(v, params, NonlinearForm::Advective)
}

/// `-P[dealias(w.grad w)]`. Only `params.dealias_fraction` is used.
pub fn nse_nonlinear(w: &SpectralVectorField, params: &ModelParams) -> Result<SpectralVectorField> {
    check_input(w)?;
    let grid = w.grid();
    let dim = grid.dim();
    let w_phys = physical_components(w);
    let mut products = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut acc = vec![0.0; grid.physical_len()];
        for (i, w_i) in w_phys.iter().enumerate() {
            let d = phys(grid, &mul_ik(grid, w.component(j), i));
            for ((a, wi), di) in acc.iter_mut().zip(w_i).zip(&d) {
                *a += wi * di;
            }
        }
        products.push(acc);
    }
    Ok(finish(grid, products, params.dealias_fraction, true).scaled(-1.0))
}

/// `nu Lap v + vche_nonlinear(v)`, i.e. `d v / dt`.
pub fn full_rhs(v: &SpectralVectorField, params: &ModelParams) -> Result<SpectralVectorField> {
    check_input(v)?;
    let nl = nonlinear_unchecked(v, params, NonlinearForm::Rotational);
    let mut out = laplacian(v).scaled(params.nu).add_scaled(1.0, &nl)?;
    out.set_divergence_free_unchecked(true);
    Ok(out)
}

/// Modified pressure `pi + u.v` on the lattice.
pub type PressureField = SpectralScalar;

/// Solves for the modified pressure `Pi = pi + u.v` from
/// `grad Pi = -(I - P) G`, `G = u.grad v - sum_j u_j grad v_j`.
pub fn recover_pressure(v: &SpectralVectorField, params: &ModelParams) -> Result<PressureField> {
    check_input(v)?;
    let g = pressure_source(v, params);
    let grid = v.grid();
    let kodd = grid.odd_wavenumbers();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.spectral_len()];
    for (idx, z) in coeffs.iter_mut().enumerate() {
        let ix = grid.spectral_indices(idx);
        let mut k2 = 0.0;
        let mut kg = Complex64::new(0.0, 0.0);
        for a in 0..grid.dim() {
            let k = kodd[ix[a]];
            k2 += k * k;
            kg += g.component(a)[idx] * k;
        }
        if k2 > 0.0 {
            *z = Complex64::new(0.0, 1.0) * kg / k2;
        }
    }
    Ok(SpectralScalar {
        grid: grid.clone(),
        coeffs,
    })
}

/// Dealiased `u.grad v - sum_j u_j grad v_j`, the part of the nonlinearity
/// left after moving `grad(u.v)` into the pressure.
pub fn pressure_source(v: &SpectralVectorField, params: &ModelParams) -> SpectralVectorField {
    let grid = v.grid();
    let dim = grid.dim();
    let u = helmholtz_filter(v, params.alpha);
    let u_phys = physical_components(&u);
    let mut products = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut acc = vec![0.0; grid.physical_len()];
        for (i, u_i) in u_phys.iter().enumerate() {
            let d = phys(grid, &mul_ik(grid, v.component(j), i));
            for ((a, ui), di) in acc.iter_mut().zip(u_i).zip(&d) {
                *a += ui * di;
            }
            let d = phys(grid, &mul_ik(grid, v.component(i), j));
            for ((a, ui), di) in acc.iter_mut().zip(u_i).zip(&d) {
                *a -= ui * di;
            }
        }
        products.push(acc);
    }
    finish(grid, products, params.dealias_fraction, false)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::models::initial::{generate_initial_data, taylor_green, InitialDataSpec, InitialKind};
    use crate::spectral::operators::{dealias_cutoff, helmholtz_apply, leray_project};

    fn random_dealiased(dim: usize, n: usize, seed: u64) -> SpectralVectorField {
        let g = Grid::new(dim, n, 2.0 * PI).unwrap();
        let mut spec = InitialDataSpec::new(InitialKind::BandRandom, 1.0);
        spec.band = (0.5, dealias_cutoff(n, 2.0 / 3.0) as f64);
        spec.seed = seed;
        generate_initial_data(&spec, &g).unwrap()
    }

    fn rel(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
        a.sub(b).unwrap().norm() / a.norm().max(b.norm()).max(1e-300)
    }

    #[test]
    fn zero_field_gives_zero() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let z = leray_project(&SpectralVectorField::zeros(&g));
        let p = ModelParams::new(0.1, 0.5).unwrap();
        assert_eq!(vche_nonlinear(&z, &p).unwrap().norm(), 0.0);
        assert_eq!(nse_nonlinear(&z, &p).unwrap().norm(), 0.0);
        assert_eq!(full_rhs(&z, &p).unwrap().norm(), 0.0);
        assert_eq!(recover_pressure(&z, &p).unwrap().coeffs.iter().map(|c| c.norm()).sum::<f64>(), 0.0);
    }

    #[test]
    fn taylor_green_nonlinearity_projects_away() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        for alpha in [0.0, 0.5, 1.0] {
            let v = helmholtz_apply(&taylor_green(1.0, &g).unwrap(), alpha);
            let p = ModelParams::new(0.1, alpha).unwrap();
            for form in [NonlinearForm::Advective, NonlinearForm::Rotational] {
                let nl = vche_nonlinear_with(&v, &p, form).unwrap();
                assert!(nl.norm() <= 1e-10 * v.norm(), "{form:?} {}", nl.norm());
            }
            assert!(nse_nonlinear(&v, &p).unwrap().norm() <= 1e-10 * v.norm());
            let rhs = full_rhs(&v, &p).unwrap();
            assert!(rel(&rhs, &v.scaled(-2.0 * 0.1)) <= 1e-10);
        }
    }

    #[test]
    fn forms_agree_and_orthogonality_holds() {
        for (dim, n) in [(2, 32), (3, 16)] {
            for seed in 0..3 {
                let v = random_dealiased(dim, n, seed);
                let p = ModelParams::new(0.05, 0.3).unwrap();
                let a = vche_nonlinear_with(&v, &p, NonlinearForm::Advective).unwrap();
                let r = vche_nonlinear_with(&v, &p, NonlinearForm::Rotational).unwrap();
                assert!(rel(&a, &r) <= 1e-10, "dim {dim}: {}", rel(&a, &r));
                let u = helmholtz_filter(&v, p.alpha);
                let terms = advective_terms(&v, &p);
                let h1 = (v.norm_sq() + v.weighted_norm_sq(|k2| k2)).sqrt();
                let res = terms.inner(&u).unwrap().abs() / (u.norm() * h1);
                assert!(res <= 1e-10, "dim {dim}: {res}");
            }
        }
    }

    #[test]
    fn nse_matches_vche_at_zero_alpha() {
        for (dim, n) in [(2, 32), (3, 16)] {
            let v = random_dealiased(dim, n, 7);
            let p = ModelParams::new(0.05, 0.0).unwrap();
            let a = vche_nonlinear(&v, &p).unwrap();
            let b = nse_nonlinear(&v, &p).unwrap();
            assert!(rel(&a, &b) <= 1e-10);
        }
    }

    #[test]
    fn rhs_is_solenoidal_and_rejects_compressible_input() {
        let v = random_dealiased(3, 16, 3);
        let p = ModelParams::new(0.05, 0.4).unwrap();
        let rhs = full_rhs(&v, &p).unwrap();
        assert!(rhs.divergence_defect() <= 1e-12);
        let g = v.grid().clone();
        let s: Vec<Vec<f64>> = (0..3)
            .map(|c| (0..g.physical_len()).map(|i| ((i * 31 + c * 7) % 13) as f64).collect())
            .collect();
        let bad = crate::spectral::transform_forward(&s, &g).unwrap();
        assert!(matches!(full_rhs(&bad, &p), Err(FlowError::NotDivergenceFree(_))));
    }

    #[test]
    fn taylor_green_pressure_closed_form() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let a = 1.3;
        for alpha in [0.0, 0.5, 1.0] {
            let beta = 1.0 + 2.0 * alpha * alpha;
            let v = helmholtz_apply(&taylor_green(a, &g).unwrap(), alpha);
            let p = ModelParams::new(0.1, alpha).unwrap();
            let pi = backward_scalar(&g, recover_pressure(&v, &p).unwrap().coeffs);
            let mut err: f64 = 0.0;
            for (i, val) in pi.iter().enumerate() {
                let [x, y, _] = g.point(i);
                let (c2x, c2y) = ((2.0 * x).cos(), (2.0 * y).cos());
                let exact = beta * (-(a * a / 4.0) * (c2x + c2y) - (a * a / 4.0) * c2x * c2y);
                err = err.max((val - exact).abs());
            }
            assert!(err <= 1e-8 * beta * a * a, "alpha {alpha}: {err}");
        }
    }

    #[test]
    fn pressure_gradient_matches_gradient_part_of_rhs() {
        let v = random_dealiased(2, 32, 11);
        let p = ModelParams::new(0.05, 0.6).unwrap();
        let g = v.grid().clone();
        let pi = recover_pressure(&v, &p).unwrap();
        let grad_pi: Vec<Vec<Complex64>> = (0..2).map(|a| mul_ik(&g, &pi.coeffs, a)).collect();
        // (I - P)(-A) = grad pi = grad Pi - grad(u.v)
        let terms = advective_terms(&v, &p);
        let gradient_part = terms.sub(&leray_project(&terms)).unwrap().scaled(-1.0);
        let u = helmholtz_filter(&v, p.alpha);
        let (up, vp) = (physical_components(&u), physical_components(&v));
        let uv: Vec<f64> = (0..g.physical_len())
            .map(|i| up[0][i] * vp[0][i] + up[1][i] * vp[1][i])
            .collect();
        let mut uv_hat = forward_scalar(&g, &uv).unwrap();
        apply_mask(&mut uv_hat, &retained_mask(&g, p.dealias_fraction));
        let expected: Vec<Vec<Complex64>> = (0..2)
            .map(|a| {
                let d = mul_ik(&g, &uv_hat, a);
                grad_pi[a].iter().zip(&d).map(|(x, y)| x - y).collect()
            })
            .collect();
        let expected = SpectralVectorField::from_components(&g, expected, false).unwrap();
        assert!(rel(&gradient_part, &expected) <= 1e-8);
    }
}
