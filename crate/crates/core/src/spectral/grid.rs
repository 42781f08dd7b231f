use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{FlowError, Result};

pub(crate) struct FftPlans {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
    pub r2c: Arc<dyn RealToComplex<f64>>,
    pub c2r: Arc<dyn ComplexToReal<f64>>,
}

struct GridInner {
    dim: usize,
    n: usize,
    box_length: f64,
    wavenumbers: Vec<f64>,
    odd_wavenumbers: Vec<f64>,
    k_sq: Vec<f64>,
    plans: FftPlans,
}

/// Periodic box `[0, L)^dim` sampled on `n` points per axis, together with
/// its wavenumber lattice and transform plans.
///
/// Spectral arrays use the half-complex layout of a real transform: the
/// leading axes run over all `n` wavenumbers in FFT order, the last axis
/// over the `n/2 + 1` non-negative ones. The remaining half of the lattice
/// is implied by Hermitian symmetry.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl Grid {
    pub fn new(dim: usize, points_per_dim: usize, box_length: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(FlowError::UnsupportedDimension(dim));
        }
        if points_per_dim < 4 || !points_per_dim.is_power_of_two() {
            return Err(FlowError::UnsupportedLength(points_per_dim));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(FlowError::InvalidParameter(format!(
                "box_length must be positive and finite, got {box_length}"
            )));
        }
        let n = points_per_dim;
        let k_min = 2.0 * PI / box_length;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|i| fft_index_to_mode(i, n) as f64 * k_min)
            .collect();
        let odd_wavenumbers: Vec<f64> = wavenumbers
            .iter()
            .enumerate()
            .map(|(i, &k)| if i == n / 2 { 0.0 } else { k })
            .collect();

        let h = n / 2 + 1;
        let spectral_len = n.pow(dim as u32 - 1) * h;
        let mut k_sq = Vec::with_capacity(spectral_len);
        let sq: Vec<f64> = wavenumbers.iter().map(|k| k * k).collect();
        if dim == 2 {
            for i in 0..n {
                for j in 0..h {
                    k_sq.push(sq[i] + sq[j]);
                }
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    for l in 0..h {
                        k_sq.push(sq[i] + sq[j] + sq[l]);
                    }
                }
            }
        }

        let mut planner = FftPlanner::new();
        let mut real_planner = RealFftPlanner::new();
        let plans = FftPlans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            r2c: real_planner.plan_fft_forward(n),
            c2r: real_planner.plan_fft_inverse(n),
        };

        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                box_length,
                wavenumbers,
                odd_wavenumbers,
                k_sq,
                plans,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.inner.n
    }

    pub fn box_length(&self) -> f64 {
        self.inner.box_length
    }

    /// Per-axis wavenumbers `2 pi m / L` in FFT order; the Nyquist index
    /// carries `m = -n/2`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Wavenumbers used by odd-order multipliers (gradient, divergence,
    /// curl, Leray projector): the Nyquist entry is zeroed so that these
    /// operators map Hermitian fields to Hermitian fields.
    pub fn odd_wavenumbers(&self) -> &[f64] {
        &self.inner.odd_wavenumbers
    }

    pub fn min_nonzero_wavenumber(&self) -> f64 {
        2.0 * PI / self.inner.box_length
    }

    /// Largest wavenumber magnitude on one axis, `(n/2) k_min`.
    pub fn nyquist_wavenumber(&self) -> f64 {
        (self.inner.n / 2) as f64 * self.min_nonzero_wavenumber()
    }

    pub fn spacing(&self) -> f64 {
        self.inner.box_length / self.inner.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.inner.box_length.powi(self.inner.dim as i32)
    }

    pub fn physical_len(&self) -> usize {
        self.inner.n.pow(self.inner.dim as u32)
    }

    /// Length of the last (half) spectral axis.
    pub fn half_len(&self) -> usize {
        self.inner.n / 2 + 1
    }

    pub fn spectral_len(&self) -> usize {
        self.inner.k_sq.len()
    }

    /// `|k|^2` for every stored spectral coefficient.
    pub fn k_squared(&self) -> &[f64] {
        &self.inner.k_sq
    }

    /// FFT indices of a stored spectral coefficient, padded with zero for
    /// 2D grids.
    pub fn spectral_indices(&self, idx: usize) -> [usize; 3] {
        let n = self.inner.n;
        let h = self.half_len();
        let last = idx % h;
        let rest = idx / h;
        if self.inner.dim == 2 {
            [rest, last, 0]
        } else {
            [rest / n, rest % n, last]
        }
    }

    /// Wavevector of a stored spectral coefficient (third entry zero in 2D).
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let ix = self.spectral_indices(idx);
        let k = &self.inner.wavenumbers;
        let mut out = [0.0; 3];
        for a in 0..self.inner.dim {
            out[a] = k[ix[a]];
        }
        out
    }

    /// Multiplicity of a stored coefficient in full-lattice sums: interior
    /// entries of the half axis stand for themselves and their conjugate
    /// partner.
    #[inline]
    pub fn mode_weight(&self, idx: usize) -> f64 {
        let j = idx % self.half_len();
        if j == 0 || j == self.inner.n / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// Physical coordinate of sample `idx` (row-major, last axis fastest).
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.inner.n;
        let dx = self.spacing();
        let mut out = [0.0; 3];
        let mut rem = idx;
        for a in (0..self.inner.dim).rev() {
            out[a] = (rem % n) as f64 * dx;
            rem /= n;
        }
        out
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.box_length == other.inner.box_length)
    }

    pub(crate) fn plans(&self) -> &FftPlans {
        &self.inner.plans
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("points_per_dim", &self.inner.n)
            .field("box_length", &self.inner.box_length)
            .finish()
    }
}

/// Signed integer mode of FFT index `i` on an `n`-point axis.
pub fn fft_index_to_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT index of the conjugate partner of index `i`.
#[inline]
pub fn partner_index(i: usize, n: usize) -> usize {
    (n - i) % n
}
