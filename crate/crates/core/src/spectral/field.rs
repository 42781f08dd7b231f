use num_complex::Complex64;

use super::fft;
use super::grid::{partner_index, Grid};
use crate::error::{FlowError, Result};

/// Divergence defect accepted for fields flagged divergence free, relative
/// to the field norm.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-12;

/// Hermitian defect beyond which a field is considered corrupted.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Vector field stored as Fourier coefficients on the half-complex lattice.
///
/// Coefficients are normalized so that `sum_k |c(k)|^2` (full lattice)
/// equals the physical L2 norm squared `int |f|^2 dx` over the box.
#[derive(Clone, Debug)]
pub struct SpectralVectorField {
    grid: Grid,
    components: Vec<Vec<Complex64>>,
    divergence_free: bool,
}

/// Scalar spectral field (divergence, 2D vorticity, pressure).
#[derive(Clone, Debug)]
pub struct SpectralScalar {
    pub grid: Grid,
    pub coeffs: Vec<Complex64>,
}

impl SpectralVectorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            components: vec![vec![Complex64::new(0.0, 0.0); grid.spectral_len()]; grid.dim()],
            divergence_free: true,
        }
    }

    /// Wraps raw coefficients. The divergence-free flag is only set after
    /// checking the defect against [`DIVERGENCE_TOLERANCE`].
    pub fn from_components(
        grid: &Grid,
        components: Vec<Vec<Complex64>>,
        divergence_free: bool,
    ) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(FlowError::ShapeMismatch {
                expected: format!("{} components", grid.dim()),
                found: format!("{} components", components.len()),
            });
        }
        for c in &components {
            if c.len() != grid.spectral_len() {
                return Err(FlowError::ShapeMismatch {
                    expected: format!("{} coefficients", grid.spectral_len()),
                    found: format!("{} coefficients", c.len()),
                });
            }
        }
        let field = Self {
            grid: grid.clone(),
            components,
            divergence_free: false,
        };
        if divergence_free {
            field.into_divergence_free()
        } else {
            Ok(field)
        }
    }

    /// Internal constructor for operator outputs whose flag is known.
    pub(crate) fn from_parts(grid: &Grid, components: Vec<Vec<Complex64>>, divergence_free: bool) -> Self {
        debug_assert_eq!(components.len(), grid.dim());
        Self {
            grid: grid.clone(),
            components,
            divergence_free,
        }
    }

    /// Verifies the divergence defect and sets the flag.
    pub fn into_divergence_free(mut self) -> Result<Self> {
        let defect = self.divergence_defect();
        if defect > DIVERGENCE_TOLERANCE {
            return Err(FlowError::NotDivergenceFree(defect));
        }
        self.divergence_free = true;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[Complex64] {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.components
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// `||f||_2^2`, summed over the full lattice.
    pub fn norm_sq(&self) -> f64 {
        self.weighted_norm_sq(|_| 1.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `sum_k w(|k|^2) |c(k)|^2` over the full lattice.
    pub fn weighted_norm_sq(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let k_sq = self.grid.k_squared();
        let mut total = 0.0;
        for idx in 0..self.grid.spectral_len() {
            let mut m = 0.0;
            for c in &self.components {
                m += c[idx].norm_sqr();
            }
            if m != 0.0 {
                total += self.grid.mode_weight(idx) * weight(k_sq[idx]) * m;
            }
        }
        total
    }

    /// Real inner product `<f, g>` over the box.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let mut total = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            for idx in 0..a.len() {
                total += self.grid.mode_weight(idx) * (a[idx].conj() * b[idx]).re;
            }
        }
        Ok(total)
    }

    /// Largest per-mode Euclidean magnitude `max_k |c(k)|`.
    pub fn spectrum_sup(&self) -> f64 {
        let mut best: f64 = 0.0;
        for idx in 0..self.grid.spectral_len() {
            let m: f64 = self.components.iter().map(|c| c[idx].norm_sqr()).sum();
            best = best.max(m);
        }
        best.sqrt()
    }

    /// `max_k |k . c(k)| / ||f||_2`, using the odd-operator wavenumbers.
    pub fn divergence_defect(&self) -> f64 {
        let norm = self.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let kodd = self.grid.odd_wavenumbers();
        let mut worst: f64 = 0.0;
        for idx in 0..self.grid.spectral_len() {
            let ix = self.grid.spectral_indices(idx);
            let mut div = Complex64::new(0.0, 0.0);
            for (a, c) in self.components.iter().enumerate() {
                div += c[idx] * kodd[ix[a]];
            }
            worst = worst.max(div.norm());
        }
        worst / norm
    }

    /// Largest violation of `c(-k) = conj(c(k))` on the self-conjugate
    /// planes of the half lattice, relative to `||f||_2`.
    pub fn hermitian_defect(&self) -> f64 {
        let norm = self.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let worst = self
            .components
            .iter()
            .map(|c| hermitian_defect_abs(&self.grid, c))
            .fold(0.0, f64::max);
        worst / norm
    }

    /// Coefficient-wise scaling by a real multiplier of `|k|^2`.
    pub fn map_k_sq(&self, multiplier: impl Fn(f64) -> f64) -> Self {
        let k_sq = self.grid.k_squared();
        let components = self
            .components
            .iter()
            .map(|c| c.iter().zip(k_sq).map(|(z, &k2)| z * multiplier(k2)).collect())
            .collect();
        Self::from_parts(&self.grid, components, self.divergence_free)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| c.iter().map(|z| z * s).collect())
            .collect();
        Self::from_parts(&self.grid, components, self.divergence_free)
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y * s).collect())
            .collect();
        Ok(Self::from_parts(
            &self.grid,
            components,
            self.divergence_free && other.divergence_free,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    pub fn is_finite(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub(crate) fn components_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.components
    }

    pub(crate) fn set_divergence_free_unchecked(&mut self, flag: bool) {
        self.divergence_free = flag;
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) && self.components.len() == other.components.len() {
            Ok(())
        } else {
            Err(FlowError::GridMismatch)
        }
    }
}

pub(crate) fn hermitian_defect_abs(grid: &Grid, coeffs: &[Complex64]) -> f64 {
    let n = grid.points_per_dim();
    let h = grid.half_len();
    let mut worst: f64 = 0.0;
    for last in [0, n / 2] {
        if grid.dim() == 2 {
            for i in 0..n {
                let a = coeffs[i * h + last];
                let b = coeffs[partner_index(i, n) * h + last];
                worst = worst.max((a - b.conj()).norm());
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    let a = coeffs[(i * n + j) * h + last];
                    let b = coeffs[(partner_index(i, n) * n + partner_index(j, n)) * h + last];
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
    }
    worst
}

/// Forward transform of one real scalar array, normalized so that
/// `sum |c|^2 = int |f|^2`.
pub fn forward_scalar(grid: &Grid, samples: &[f64]) -> Result<Vec<Complex64>> {
    if samples.len() != grid.physical_len() {
        return Err(FlowError::ShapeMismatch {
            expected: format!("{} samples", grid.physical_len()),
            found: format!("{} samples", samples.len()),
        });
    }
    let scale = grid.volume().sqrt() / grid.physical_len() as f64;
    let mut out = fft::forward_unscaled(grid, samples);
    out.iter_mut().for_each(|z| *z *= scale);
    Ok(out)
}

/// Inverse of [`forward_scalar`]. Skips the Hermitian check; callers that
/// accept external data should use [`transform_backward`].
pub fn backward_scalar(grid: &Grid, coeffs: Vec<Complex64>) -> Vec<f64> {
    let scale = 1.0 / grid.volume().sqrt();
    let mut out = fft::backward_unscaled(grid, coeffs);
    out.iter_mut().for_each(|x| *x *= scale);
    out
}

/// Samples per component to Fourier coefficients. The mean mode is kept, so
/// arbitrary real fields round-trip; the output is not flagged divergence
/// free.
pub fn transform_forward(samples: &[Vec<f64>], grid: &Grid) -> Result<SpectralVectorField> {
    if samples.len() != grid.dim() {
        return Err(FlowError::ShapeMismatch {
            expected: format!("{} components", grid.dim()),
            found: format!("{} components", samples.len()),
        });
    }
    let components = samples
        .iter()
        .map(|s| forward_scalar(grid, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralVectorField::from_parts(grid, components, false))
}

/// Coefficients back to real samples per component.
pub fn transform_backward(field: &SpectralVectorField) -> Result<Vec<Vec<f64>>> {
    let defect = field.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(FlowError::HermitianViolation(defect));
    }
    Ok(field
        .components
        .iter()
        .map(|c| backward_scalar(&field.grid, c.clone()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_samples(grid: &Grid, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..grid.dim())
            .map(|_| (0..grid.physical_len()).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect()
    }

    #[test]
    fn constant_field_has_only_mean_mode() {
        let g = Grid::new(2, 8, 3.0).unwrap();
        let c = 1.7;
        let s = vec![vec![c; g.physical_len()], vec![0.0; g.physical_len()]];
        let f = transform_forward(&s, &g).unwrap();
        let mean = f.component(0)[0];
        assert!((mean.re - c * g.volume().sqrt()).abs() < 1e-12);
        for (idx, z) in f.component(0).iter().enumerate().skip(1) {
            assert!(z.norm() < 1e-13, "mode {idx} = {z}");
        }
    }

    #[test]
    fn single_cosine_occupies_plus_minus_k() {
        let l = 5.0;
        let g = Grid::new(2, 16, l).unwrap();
        let s0: Vec<f64> = (0..g.physical_len())
            .map(|i| (2.0 * PI * g.point(i)[0] / l).cos())
            .collect();
        let s = vec![s0, vec![0.0; g.physical_len()]];
        let f = transform_forward(&s, &g).unwrap();
        let h = g.half_len();
        let plus = f.component(0)[h];
        let minus = f.component(0)[15 * h];
        assert!((plus.norm() - minus.norm()).abs() < 1e-13);
        assert!(plus.norm() > 0.1);
        let others: f64 = f
            .component(0)
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != h && *i != 15 * h)
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max);
        assert!(others < 1e-13);
    }

    #[test]
    fn parseval_and_round_trip_2d_3d() {
        for (dim, n) in [(2, 32), (3, 16)] {
            let g = Grid::new(dim, n, 2.3).unwrap();
            let s = random_samples(&g, 11);
            let f = transform_forward(&s, &g).unwrap();
            let phys: f64 = s.iter().flatten().map(|x| x * x).sum::<f64>() * g.cell_volume();
            assert!((phys - f.norm_sq()).abs() <= 1e-12 * phys);
            assert!(f.hermitian_defect() < 1e-14);
            let back = transform_backward(&f).unwrap();
            let scale = s.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
            for (a, b) in s.iter().flatten().zip(back.iter().flatten()) {
                assert!((a - b).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn backward_rejects_non_hermitian_input() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let mut comps = vec![vec![Complex64::new(0.0, 0.0); g.spectral_len()]; 2];
        comps[0][g.half_len()] = Complex64::new(1.0, 0.0);
        let f = SpectralVectorField::from_components(&g, comps, false).unwrap();
        assert!(matches!(
            transform_backward(&f),
            Err(FlowError::HermitianViolation(_))
        ));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let s = vec![vec![0.0; 10], vec![0.0; 10]];
        assert!(matches!(
            transform_forward(&s, &g),
            Err(FlowError::ShapeMismatch { .. })
        ));
        assert!(transform_forward(&s[..1], &g).is_err());
    }
}
