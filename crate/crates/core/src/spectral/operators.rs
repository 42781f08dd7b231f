//! Fourier-multiplier operators: derivatives, Leray projection, Helmholtz
//! filter and dealiasing.

use num_complex::Complex64;

use super::field::{SpectralScalar, SpectralVectorField};
use super::grid::{fft_index_to_mode, Grid};
use crate::error::{FlowError, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivative {
    /// `d/dx_j` applied to every component.
    Gradient(usize),
    Laplacian,
    Divergence,
    /// Vector curl in 3D, scalar `d_x f_y - d_y f_x` in 2D.
    Curl,
}

#[derive(Clone, Debug)]
pub enum Derived {
    Vector(SpectralVectorField),
    Scalar(SpectralScalar),
}

pub fn apply_derivative(field: &SpectralVectorField, which: Derivative) -> Result<Derived> {
    let grid = field.grid();
    match which {
        Derivative::Gradient(j) => {
            if j >= grid.dim() {
                return Err(FlowError::InvalidParameter(format!(
                    "gradient axis {j} out of range for dimension {}",
                    grid.dim()
                )));
            }
            Ok(Derived::Vector(partial(field, j)))
        }
        Derivative::Laplacian => Ok(Derived::Vector(laplacian(field))),
        Derivative::Divergence => Ok(Derived::Scalar(divergence(field))),
        Derivative::Curl => match grid.dim() {
            2 => Ok(Derived::Scalar(curl_2d(field))),
            3 => Ok(Derived::Vector(curl_3d(field))),
            d => Err(FlowError::UnsupportedDimension(d)),
        },
    }
}

/// Odd-operator wavenumber along `axis` for stored coefficient `idx`.
#[inline]
pub(crate) fn axis_wavenumber(grid: &Grid, idx: usize, axis: usize) -> f64 {
    let n = grid.points_per_dim();
    let h = grid.half_len();
    let i = match (grid.dim(), axis) {
        (2, 0) => idx / h,
        (3, 0) => idx / (n * h),
        (3, 1) => (idx / h) % n,
        _ => idx % h,
    };
    grid.odd_wavenumbers()[i]
}

/// `i k_axis * c(k)` for one scalar coefficient array.
pub fn mul_ik(grid: &Grid, coeffs: &[Complex64], axis: usize) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, &z)| I * axis_wavenumber(grid, idx, axis) * z)
        .collect()
}

pub fn partial(field: &SpectralVectorField, axis: usize) -> SpectralVectorField {
    let grid = field.grid();
    let comps = field
        .components()
        .iter()
        .map(|c| mul_ik(grid, c, axis))
        .collect();
    SpectralVectorField::from_parts(grid, comps, field.is_divergence_free())
}

pub fn laplacian(field: &SpectralVectorField) -> SpectralVectorField {
    field.map_k_sq(|k2| -k2)
}

pub fn divergence(field: &SpectralVectorField) -> SpectralScalar {
    let grid = field.grid();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.spectral_len()];
    for (axis, c) in field.components().iter().enumerate() {
        for (idx, z) in out.iter_mut().enumerate() {
            *z += I * axis_wavenumber(grid, idx, axis) * c[idx];
        }
    }
    SpectralScalar {
        grid: grid.clone(),
        coeffs: out,
    }
}

pub fn curl_2d(field: &SpectralVectorField) -> SpectralScalar {
    let grid = field.grid();
    let fx = field.component(0);
    let fy = field.component(1);
    let coeffs = (0..grid.spectral_len())
        .map(|idx| {
            I * (axis_wavenumber(grid, idx, 0) * fy[idx] - axis_wavenumber(grid, idx, 1) * fx[idx])
        })
        .collect();
    SpectralScalar {
        grid: grid.clone(),
        coeffs,
    }
}

pub fn curl_3d(field: &SpectralVectorField) -> SpectralVectorField {
    let grid = field.grid();
    let len = grid.spectral_len();
    let f = field.components();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); len]; 3];
    for idx in 0..len {
        let k = [
            axis_wavenumber(grid, idx, 0),
            axis_wavenumber(grid, idx, 1),
            axis_wavenumber(grid, idx, 2),
        ];
        out[0][idx] = I * (k[1] * f[2][idx] - k[2] * f[1][idx]);
        out[1][idx] = I * (k[2] * f[0][idx] - k[0] * f[2][idx]);
        out[2][idx] = I * (k[0] * f[1][idx] - k[1] * f[0][idx]);
    }
    SpectralVectorField::from_parts(grid, out, true)
}

/// Per-mode orthogonal projection onto `k . c = 0`; the mean mode (and any
/// mode whose odd wavevector vanishes) is annihilated.
pub fn leray_project(field: &SpectralVectorField) -> SpectralVectorField {
    let mut out = field.clone();
    leray_project_in_place(&mut out);
    out
}

pub(crate) fn leray_project_in_place(field: &mut SpectralVectorField) {
    let grid = field.grid().clone();
    let dim = grid.dim();
    let comps = field.components_mut();
    for idx in 0..grid.spectral_len() {
        let mut k = [0.0; 3];
        let mut k2 = 0.0;
        for (a, ka) in k.iter_mut().enumerate().take(dim) {
            *ka = axis_wavenumber(&grid, idx, a);
            k2 += *ka * *ka;
        }
        if k2 == 0.0 {
            for c in comps.iter_mut() {
                c[idx] = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        let mut dot = Complex64::new(0.0, 0.0);
        for a in 0..dim {
            dot += comps[a][idx] * k[a];
        }
        let s = dot / k2;
        for a in 0..dim {
            comps[a][idx] -= s * k[a];
        }
    }
    field.set_divergence_free_unchecked(true);
}

/// Solves `u - alpha^2 Lap u = v` mode by mode.
pub fn helmholtz_filter(v: &SpectralVectorField, alpha: f64) -> SpectralVectorField {
    if alpha == 0.0 {
        return v.clone();
    }
    let a2 = alpha * alpha;
    v.map_k_sq(|k2| 1.0 / (1.0 + a2 * k2))
}

/// Applies `1 - alpha^2 Lap`, the inverse of [`helmholtz_filter`].
pub fn helmholtz_apply(u: &SpectralVectorField, alpha: f64) -> SpectralVectorField {
    if alpha == 0.0 {
        return u.clone();
    }
    let a2 = alpha * alpha;
    u.map_k_sq(|k2| 1.0 + a2 * k2)
}

/// Largest retained integer mode `floor(fraction * n / 2)`.
pub fn dealias_cutoff(n: usize, fraction: f64) -> usize {
    ((fraction * (n / 2) as f64) + 1e-9).floor() as usize
}

/// Zeroes every coefficient with some `|m_j| > fraction * n / 2`.
pub fn dealias(field: &SpectralVectorField, fraction: f64) -> SpectralVectorField {
    let mut out = field.clone();
    dealias_in_place(&mut out, fraction);
    out
}

pub(crate) fn dealias_in_place(field: &mut SpectralVectorField, fraction: f64) {
    let grid = field.grid().clone();
    let mask = retained_mask(&grid, fraction);
    for c in field.components_mut() {
        apply_mask(c, &mask);
    }
}

pub(crate) fn apply_mask(coeffs: &mut [Complex64], mask: &[bool]) {
    for (z, &keep) in coeffs.iter_mut().zip(mask) {
        if !keep {
            *z = Complex64::new(0.0, 0.0);
        }
    }
}

/// `true` for coefficients kept by [`dealias`].
pub fn retained_mask(grid: &Grid, fraction: f64) -> Vec<bool> {
    let n = grid.points_per_dim();
    let cutoff = dealias_cutoff(n, fraction) as i64;
    let keep: Vec<bool> = (0..n)
        .map(|i| fft_index_to_mode(i, n).abs() <= cutoff)
        .collect();
    // last axis stores m = 0..=n/2
    let keep_last: Vec<bool> = (0..grid.half_len()).map(|j| (j as i64) <= cutoff).collect();
    (0..grid.spectral_len())
        .map(|idx| {
            let ix = grid.spectral_indices(idx);
            match grid.dim() {
                2 => keep[ix[0]] && keep_last[ix[1]],
                _ => keep[ix[0]] && keep[ix[1]] && keep_last[ix[2]],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field::{transform_backward, transform_forward};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: &Grid, seed: u64) -> SpectralVectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<Vec<f64>> = (0..grid.dim())
            .map(|_| (0..grid.physical_len()).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        transform_forward(&s, grid).unwrap()
    }

    fn unit_mode(grid: &Grid, idx: usize) -> SpectralVectorField {
        let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.spectral_len()]; grid.dim()];
        comps[1][idx] = Complex64::new(1.0, 0.0);
        SpectralVectorField::from_components(grid, comps, false).unwrap()
    }

    #[test]
    fn laplacian_scales_unit_mode() {
        let g = Grid::new(2, 8, 2.0 * PI).unwrap();
        // k = (1, 0)
        let f = unit_mode(&g, g.half_len());
        let Derived::Vector(l) = apply_derivative(&f, Derivative::Laplacian).unwrap() else {
            panic!("laplacian is a vector")
        };
        assert_eq!(l.component(1)[g.half_len()], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn gradient_of_cosine_is_minus_sine() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let s0: Vec<f64> = (0..g.physical_len()).map(|i| g.point(i)[0].cos()).collect();
        let f = transform_forward(&[s0, vec![0.0; g.physical_len()]], &g).unwrap();
        let Derived::Vector(d) = apply_derivative(&f, Derivative::Gradient(0)).unwrap() else {
            panic!()
        };
        let back = transform_backward(&d).unwrap();
        for (i, x) in back[0].iter().enumerate() {
            assert!((x + g.point(i)[0].sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn divergence_of_projection_vanishes() {
        for (dim, n) in [(2, 16), (3, 8)] {
            let g = Grid::new(dim, n, 3.0).unwrap();
            let f = leray_project(&random_field(&g, 3));
            let Derived::Scalar(d) = apply_derivative(&f, Derivative::Divergence).unwrap() else {
                panic!()
            };
            let worst = d.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(worst <= 1e-12 * f.norm());
            assert!(f.is_divergence_free());
        }
    }

    #[test]
    fn projection_kills_gradients_and_keeps_solenoidal_fields() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let s = random_field(&g, 5).component(0).to_vec();
        let grad: Vec<Vec<Complex64>> = (0..3).map(|a| mul_ik(&g, &s, a)).collect();
        let grad = SpectralVectorField::from_components(&g, grad, false).unwrap();
        assert!(leray_project(&grad).norm() <= 1e-14 * grad.norm());

        let sol = leray_project(&random_field(&g, 6));
        let again = leray_project(&sol);
        assert!(again.sub(&sol).unwrap().norm() <= 1e-14 * sol.norm());
    }

    #[test]
    fn projection_matches_per_mode_formula() {
        let g = Grid::new(2, 8, 2.0 * PI).unwrap();
        let f = random_field(&g, 9);
        let p = leray_project(&f);
        let kodd = g.odd_wavenumbers();
        for idx in 0..g.spectral_len() {
            let ix = g.spectral_indices(idx);
            let (kx, ky) = (kodd[ix[0]], kodd[ix[1]]);
            let (a, b) = (f.component(0)[idx], f.component(1)[idx]);
            let k2 = kx * kx + ky * ky;
            let (ea, eb) = if k2 == 0.0 {
                (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
            } else {
                let dot = a * kx + b * ky;
                (a - dot * kx / k2, b - dot * ky / k2)
            };
            assert!((p.component(0)[idx] - ea).norm() < 1e-14);
            assert!((p.component(1)[idx] - eb).norm() < 1e-14);
        }
    }

    #[test]
    fn helmholtz_single_modes() {
        let g = Grid::new(2, 8, 2.0 * PI).unwrap();
        let h = g.half_len();
        let f = unit_mode(&g, h); // |k| = 1
        assert_eq!(helmholtz_filter(&f, 1.0).component(1)[h].re, 0.5);
        assert_eq!(helmholtz_filter(&f, 0.0).component(1), f.component(1));
        let f2 = unit_mode(&g, 2 * h); // |k| = 2
        assert_eq!(helmholtz_apply(&f2, 1.0).component(1)[2 * h].re, 5.0);
        assert_eq!(helmholtz_apply(&f2, 0.0).component(1), f2.component(1));
    }

    #[test]
    fn helmholtz_round_trip() {
        let g = Grid::new(2, 16, 5.0).unwrap();
        let f = random_field(&g, 1);
        let back = helmholtz_filter(&helmholtz_apply(&f, 0.7), 0.7);
        assert!(back.sub(&f).unwrap().norm() <= 1e-13 * f.norm());
    }

    #[test]
    fn dealias_two_thirds_on_eight_points() {
        assert_eq!(dealias_cutoff(8, 2.0 / 3.0), 2);
        assert_eq!(dealias_cutoff(8, 1.0), 4);
        let g = Grid::new(2, 8, 1.0).unwrap();
        let mask = retained_mask(&g, 2.0 / 3.0);
        for (idx, keep) in mask.iter().enumerate() {
            let ix = g.spectral_indices(idx);
            let m0 = fft_index_to_mode(ix[0], 8).abs();
            let m1 = ix[1] as i64;
            assert_eq!(*keep, m0 <= 2 && m1 <= 2);
        }
        let f = random_field(&g, 2);
        assert_eq!(dealias(&f, 1.0).components(), f.components());
        let d = dealias(&f, 2.0 / 3.0);
        assert!(d.norm_sq() <= f.norm_sq());
        assert!(d.hermitian_defect() < 1e-15);
    }
}
