//! Initial data: Taylor-Green cells, the rescaled compactly supported
//! vortex family, and random-phase band-limited fields.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FlowError, Result};
use crate::spectral::field::{forward_scalar, transform_forward};
use crate::spectral::grid::partner_index;
use crate::spectral::operators::{leray_project, mul_ik};
use crate::spectral::{Grid, SpectralVectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialKind {
    TaylorGreen,
    LocalizedVortex,
    BandRandom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialDataSpec {
    pub kind: InitialKind,
    /// Taylor-Green: velocity scale. Vortex: stream-function scale (peak
    /// `amplitude * R`). Band: rms velocity over the box.
    pub amplitude: f64,
    /// Rescaling `u^eps(x) = eps^{n/2} u_0(eps x)` about the box centre.
    pub epsilon: f64,
    /// Wavenumber magnitudes `[k_lo, k_hi]` populated by `BandRandom`.
    pub band: (f64, f64),
    pub seed: u64,
    /// Support radius of the unscaled vortex as a fraction of the box
    /// length; the rescaled vortex has radius `vortex_radius * L / eps`.
    pub vortex_radius: f64,
}

pub const DEFAULT_VORTEX_RADIUS: f64 = 1.0 / 16.0;

/// Smallest rescaled vortex radius accepted, in grid spacings.
pub const MIN_VORTEX_CELLS: f64 = 4.0;

impl InitialDataSpec {
    pub fn new(kind: InitialKind, amplitude: f64) -> Self {
        Self {
            kind,
            amplitude,
            epsilon: 1.0,
            band: (0.0, 0.0),
            seed: 0,
            vortex_radius: DEFAULT_VORTEX_RADIUS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(FlowError::InvalidParameter("amplitude must be finite".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(FlowError::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.vortex_radius.is_nan() || self.vortex_radius <= 0.0 {
            return Err(FlowError::InvalidParameter("vortex_radius must be > 0".into()));
        }
        Ok(())
    }
}

/// Compactly supported bump `exp(-1/(1-s^2))` on `s < 1`.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

pub fn generate_initial_data(spec: &InitialDataSpec, grid: &Grid) -> Result<SpectralVectorField> {
    spec.validate()?;
    match spec.kind {
        InitialKind::TaylorGreen => taylor_green(spec.amplitude, grid),
        InitialKind::LocalizedVortex => localized_vortex(spec, grid),
        InitialKind::BandRandom => band_random(spec, grid),
    }
}

/// `amplitude * (cos x sin y, -sin x cos y)`; needs `L` a multiple of `2 pi`.
pub fn taylor_green(amplitude: f64, grid: &Grid) -> Result<SpectralVectorField> {
    if grid.dim() != 2 {
        return Err(FlowError::IncompatibleInitialData(
            "taylor_green is defined for 2D grids only".into(),
        ));
    }
    let periods = grid.box_length() / (2.0 * PI);
    if (periods - periods.round()).abs() > 1e-9 * periods.max(1.0) || periods.round() < 1.0 {
        return Err(FlowError::IncompatibleInitialData(format!(
            "taylor_green needs box_length a multiple of 2 pi, got {}",
            grid.box_length()
        )));
    }
    let len = grid.physical_len();
    let mut ux = Vec::with_capacity(len);
    let mut uy = Vec::with_capacity(len);
    for p in 0..len {
        let [x, y, _] = grid.point(p);
        ux.push(amplitude * x.cos() * y.sin());
        uy.push(-amplitude * x.sin() * y.cos());
    }
    Ok(leray_project(&transform_forward(&[ux, uy], grid)?))
}

fn localized_vortex(spec: &InitialDataSpec, grid: &Grid) -> Result<SpectralVectorField> {
    let l = grid.box_length();
    let eps = spec.epsilon;
    let base_radius = spec.vortex_radius * l;
    let radius = base_radius / eps;
    if radius > 0.5 * l {
        return Err(FlowError::IncompatibleInitialData(format!(
            "rescaled vortex radius {radius:.4} exceeds half the box ({:.4}); increase epsilon or the box",
            0.5 * l
        )));
    }
    if radius < MIN_VORTEX_CELLS * grid.spacing() {
        return Err(FlowError::IncompatibleInitialData(format!(
            "rescaled vortex radius {radius:.4} spans fewer than {MIN_VORTEX_CELLS} grid cells"
        )));
    }
    let n = grid.dim() as f64;
    // u^eps = eps^{n/2 - 1} curl-perp [psi_0(eps (x - c))]
    let scale = eps.powf(n / 2.0 - 1.0) * spec.amplitude * base_radius * E;
    let centre = 0.5 * l;
    let psi: Vec<f64> = (0..grid.physical_len())
        .map(|p| {
            let x = grid.point(p);
            let r2: f64 = x[..grid.dim()].iter().map(|xi| (xi - centre).powi(2)).sum();
            scale * bump(r2.sqrt() / radius)
        })
        .collect();
    let psi_hat = forward_scalar(grid, &psi)?;
    // (d_y psi, -d_x psi[, 0])
    let uy = mul_ik(grid, &psi_hat, 0).into_iter().map(|z| -z).collect();
    let ux = mul_ik(grid, &psi_hat, 1);
    let mut comps = vec![ux, uy];
    if grid.dim() == 3 {
        comps.push(vec![Complex64::new(0.0, 0.0); grid.spectral_len()]);
    }
    // exact zero mean and solenoidal up to round-off
    Ok(leray_project(&SpectralVectorField::from_components(
        grid, comps, false,
    )?))
}

fn band_random(spec: &InitialDataSpec, grid: &Grid) -> Result<SpectralVectorField> {
    let (lo, hi) = spec.band;
    if !(lo >= 0.0 && hi >= lo) {
        return Err(FlowError::IncompatibleInitialData(format!(
            "band [{lo}, {hi}] is not an interval of non-negative wavenumbers"
        )));
    }
    if hi >= grid.nyquist_wavenumber() {
        return Err(FlowError::IncompatibleInitialData(format!(
            "band upper edge {hi} reaches the Nyquist wavenumber {}",
            grid.nyquist_wavenumber()
        )));
    }
    let dim = grid.dim();
    let n = grid.points_per_dim();
    let k_sq = grid.k_squared();
    let kodd = grid.odd_wavenumbers();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.spectral_len()]; dim];
    let mut populated = 0usize;
    for idx in 0..grid.spectral_len() {
        let kmag = k_sq[idx].sqrt();
        if kmag == 0.0 || kmag < lo || kmag > hi {
            continue;
        }
        let ix = grid.spectral_indices(idx);
        let mut k = [0.0; 3];
        for a in 0..dim {
            k[a] = kodd[ix[a]];
        }
        let k2: f64 = k.iter().map(|x| x * x).sum();
        // unit-magnitude random vector orthogonal to k
        let c = loop {
            let mut a = [Complex64::new(0.0, 0.0); 3];
            for ai in a.iter_mut().take(dim) {
                let theta = 2.0 * PI * rng.random::<f64>();
                *ai = Complex64::from_polar(1.0, theta);
            }
            let dot: Complex64 = (0..dim).map(|i| a[i] * k[i]).sum();
            for i in 0..dim {
                a[i] -= dot * k[i] / k2;
            }
            let norm = (0..dim).map(|i| a[i].norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for ai in a.iter_mut() {
                    *ai /= norm;
                }
                break a;
            }
        };
        for a in 0..dim {
            comps[a][idx] = c[a];
        }
        populated += 1;
    }
    if populated == 0 {
        return Err(FlowError::IncompatibleInitialData(format!(
            "band [{lo}, {hi}] contains no lattice modes"
        )));
    }
    symmetrize_self_conjugate(grid, &mut comps, n);
    let mut field = SpectralVectorField::from_components(grid, comps, false)?;
    let rms = (field.norm_sq() / grid.volume()).sqrt();
    if rms > 0.0 {
        field = field.scaled(spec.amplitude / rms);
    }
    Ok(leray_project(&field))
}

/// Enforces `c(-k) = conj(c(k))` on the planes where both partners are
/// stored; self-partnered modes are zeroed.
fn symmetrize_self_conjugate(grid: &Grid, comps: &mut [Vec<Complex64>], n: usize) {
    let h = grid.half_len();
    let leading = n.pow(grid.dim() as u32 - 1);
    let partner_lead = |lead: usize| {
        if grid.dim() == 2 {
            partner_index(lead, n)
        } else {
            partner_index(lead / n, n) * n + partner_index(lead % n, n)
        }
    };
    for last in [0, n / 2] {
        for lead in 0..leading {
            let p = partner_lead(lead);
            let a = lead * h + last;
            let b = p * h + last;
            for c in comps.iter_mut() {
                if a == b {
                    c[a] = Complex64::new(0.0, 0.0);
                } else if a < b {
                    c[b] = c[a].conj();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_green_energy_is_two_pi_squared() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let u = taylor_green(1.0, &g).unwrap();
        assert!((u.norm_sq() - 2.0 * PI * PI).abs() < 1e-12 * 2.0 * PI * PI);
        assert!(u.is_divergence_free());
        assert!(u.divergence_defect() < 1e-15);
    }

    #[test]
    fn taylor_green_rejects_incompatible_box() {
        let g = Grid::new(2, 16, 5.0).unwrap();
        assert!(matches!(
            taylor_green(1.0, &g),
            Err(FlowError::IncompatibleInitialData(_))
        ));
        let g3 = Grid::new(3, 8, 2.0 * PI).unwrap();
        assert!(taylor_green(1.0, &g3).is_err());
    }

    #[test]
    fn band_random_is_deterministic_and_solenoidal() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let mut spec = InitialDataSpec::new(InitialKind::BandRandom, 0.3);
        spec.band = (1.0, 6.0);
        spec.seed = 42;
        let a = generate_initial_data(&spec, &g).unwrap();
        let b = generate_initial_data(&spec, &g).unwrap();
        for (x, y) in a.components().iter().zip(b.components()) {
            for (p, q) in x.iter().zip(y) {
                assert_eq!(p.re.to_bits(), q.re.to_bits());
                assert_eq!(p.im.to_bits(), q.im.to_bits());
            }
        }
        assert!(a.divergence_defect() < 1e-14);
        assert!(a.hermitian_defect() < 1e-15);
        let rms = (a.norm_sq() / g.volume()).sqrt();
        assert!((rms - 0.3).abs() < 1e-12);
        spec.seed = 43;
        let c = generate_initial_data(&spec, &g).unwrap();
        assert!(c.sub(&a).unwrap().norm() > 0.1);
    }

    #[test]
    fn band_random_flat_spectrum_in_2d() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let mut spec = InitialDataSpec::new(InitialKind::BandRandom, 1.0);
        spec.band = (0.0, 5.0);
        let f = generate_initial_data(&spec, &g).unwrap();
        let mags: Vec<f64> = (0..g.spectral_len())
            .map(|i| f.components().iter().map(|c| c[i].norm_sqr()).sum::<f64>())
            .filter(|m| *m > 0.0)
            .collect();
        let first = mags[0];
        assert!(mags.iter().all(|m| (m - first).abs() < 1e-12 * first));
    }

    #[test]
    fn band_outside_resolution_is_rejected() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let mut spec = InitialDataSpec::new(InitialKind::BandRandom, 1.0);
        spec.band = (1.0, 8.0);
        assert!(generate_initial_data(&spec, &g).is_err());
        spec.band = (3.0, 2.0);
        assert!(generate_initial_data(&spec, &g).is_err());
        spec.band = (0.1, 0.5);
        assert!(generate_initial_data(&spec, &g).is_err());
    }

    #[test]
    fn vortex_support_limits() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let mut spec = InitialDataSpec::new(InitialKind::LocalizedVortex, 1.0);
        spec.epsilon = 0.1; // radius L/1.6
        assert!(generate_initial_data(&spec, &g).is_err());
        spec.epsilon = 4.0; // radius L/64 = one cell
        assert!(generate_initial_data(&spec, &g).is_err());
        spec.epsilon = 1.0;
        let v = generate_initial_data(&spec, &g).unwrap();
        assert!(v.divergence_defect() < 1e-14);
        assert!(v.component(0)[0].norm() == 0.0);
    }
}
