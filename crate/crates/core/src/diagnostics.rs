//! Energy functionals, Sobolev seminorms, Fourier splitting and residual
//! audits evaluated on a spectral state.

use crate::error::{FlowError, Result};
use crate::models::nonlinear::{advective_terms, full_rhs};
use crate::spectral::operators::helmholtz_filter;
use crate::spectral::{ModelParams, SpectralVectorField};

/// Highest seminorm order recorded by default (`||v||`, `||grad v||`,
/// `||Lap v||`).
pub const DEFAULT_M_MAX: u32 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub filtered_energy: f64,
    /// `v_norms[m] = ||grad^m v||^2` for `m = 0..=m_max`.
    pub v_norms: Vec<f64>,
    pub u_norms: Vec<f64>,
    /// `||d_t v||^2`; NaN when disabled.
    pub dt_v_norm: f64,
    pub spectrum_sup: f64,
    pub split_low: f64,
    pub split_high: f64,
    pub filter_identity_residual: f64,
    /// NaN when disabled.
    pub orthogonality_residual: f64,
    pub weighted_energy: Option<f64>,
}

/// Frequency-splitting parameters; the radius is `sqrt(d / (nu (1 + t)))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub d: f64,
    pub nu: f64,
    pub t: f64,
}

impl SplitSpec {
    pub fn new(d: f64, nu: f64, t: f64) -> Result<Self> {
        if !(d > 0.0 && nu > 0.0 && t > -1.0) {
            return Err(FlowError::InvalidParameter(format!(
                "split needs d > 0, nu > 0, t > -1 (got d={d}, nu={nu}, t={t})"
            )));
        }
        Ok(Self { d, nu, t })
    }

    /// `d = n/2 + 1`.
    pub fn default_d(dim: usize) -> f64 {
        dim as f64 / 2.0 + 1.0
    }

    pub fn radius(&self) -> f64 {
        self.radius_sq().sqrt()
    }

    pub fn radius_sq(&self) -> f64 {
        self.d / (self.nu * (1.0 + self.t))
    }
}

/// Multipliers for the weighted spectral energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralWeight {
    /// `exp(-|k|^2)`
    LowPass,
    /// `1 - exp(-|k|^2)`
    HighPass,
    /// `exp(-|k|^2 (t + 1 - tau))`
    HeatKernel { tau: f64 },
}

impl SpectralWeight {
    pub fn eval(&self, k: f64, t: f64) -> f64 {
        match *self {
            SpectralWeight::LowPass => (-k * k).exp(),
            SpectralWeight::HighPass => -(-k * k).exp_m1(),
            SpectralWeight::HeatKernel { tau } => (-k * k * (t + 1.0 - tau)).exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsOptions {
    pub m_max: u32,
    /// Splitting constant; `None` selects `n/2 + 1`.
    pub split_d: Option<f64>,
    pub time_derivative: bool,
    pub orthogonality: bool,
    pub weight: Option<SpectralWeight>,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            m_max: DEFAULT_M_MAX,
            split_d: None,
            time_derivative: true,
            orthogonality: true,
            weight: None,
        }
    }
}

/// `sum |v(k)|^2 / (1 + alpha^2 |k|^2)`, i.e. `<u, v>`.
pub fn filtered_energy(v: &SpectralVectorField, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    v.weighted_norm_sq(|k2| 1.0 / (1.0 + a2 * k2))
}

/// `||grad^m f||^2 = sum |k|^{2m} |f(k)|^2`.
pub fn sobolev_seminorm(field: &SpectralVectorField, m: u32) -> f64 {
    if m == 0 {
        return field.norm_sq();
    }
    field.weighted_norm_sq(|k2| k2.powi(m as i32))
}

/// `| ||u||^2 + 2 a^2 ||grad u||^2 + a^4 ||Lap u||^2 - ||v||^2 | / ||v||^2`.
pub fn filter_identity_residual(v: &SpectralVectorField, u: &SpectralVectorField, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let lhs = sobolev_seminorm(u, 0) + 2.0 * a2 * sobolev_seminorm(u, 1) + a2 * a2 * sobolev_seminorm(u, 2);
    let rhs = v.norm_sq();
    if rhs == 0.0 {
        return lhs.abs();
    }
    (lhs - rhs).abs() / rhs
}

/// Energies inside and outside the splitting ball `|k| < rho`.
pub fn fourier_split(v: &SpectralVectorField, spec: &SplitSpec) -> (f64, f64) {
    let rho2 = spec.radius_sq();
    let low = v.weighted_norm_sq(|k2| if k2 < rho2 { 1.0 } else { 0.0 });
    let high = v.weighted_norm_sq(|k2| if k2 < rho2 { 0.0 } else { 1.0 });
    (low, high)
}

/// Largest Euclidean coefficient magnitude over the lattice.
pub fn spectrum_sup(v: &SpectralVectorField) -> f64 {
    v.spectrum_sup()
}

/// `sum |psi(|k|, t)|^2 |v(k)|^2`.
pub fn weighted_spectral_energy(
    v: &SpectralVectorField,
    multiplier: impl Fn(f64, f64) -> f64,
    t: f64,
) -> f64 {
    v.weighted_norm_sq(|k2| multiplier(k2.sqrt(), t).powi(2))
}

/// `|<u.grad v + sum_j v_j grad u_j, u>| / (||u|| ||v||_{H^1})`.
pub fn bilinear_orthogonality_residual(v: &SpectralVectorField, params: &ModelParams) -> Result<f64> {
    let u = helmholtz_filter(v, params.alpha);
    let scale = u.norm() * (v.norm_sq() + sobolev_seminorm(v, 1)).sqrt();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let terms = advective_terms(v, params);
    Ok(terms.inner(&u)?.abs() / scale)
}

/// `||grad^m d_t v||^2` with `d_t v = full_rhs(v)`.
pub fn time_derivative_norm(v: &SpectralVectorField, params: &ModelParams, m: u32) -> Result<f64> {
    Ok(sobolev_seminorm(&full_rhs(v, params)?, m))
}

/// Evaluates every functional at one time.
pub fn record(
    v: &SpectralVectorField,
    params: &ModelParams,
    t: f64,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsRecord> {
    let u = helmholtz_filter(v, params.alpha);
    let v_norms: Vec<f64> = (0..=opts.m_max).map(|m| sobolev_seminorm(v, m)).collect();
    let u_norms: Vec<f64> = (0..=opts.m_max).map(|m| sobolev_seminorm(&u, m)).collect();
    let d = opts.split_d.unwrap_or_else(|| SplitSpec::default_d(v.grid().dim()));
    let (split_low, split_high) = fourier_split(v, &SplitSpec::new(d, params.nu, t)?);
    let dt_v_norm = if opts.time_derivative {
        time_derivative_norm(v, params, 0)?
    } else {
        f64::NAN
    };
    let orthogonality_residual = if opts.orthogonality {
        bilinear_orthogonality_residual(v, params)?
    } else {
        f64::NAN
    };
    Ok(DiagnosticsRecord {
        t,
        filtered_energy: filtered_energy(v, params.alpha),
        filter_identity_residual: filter_identity_residual(v, &u, params.alpha),
        v_norms,
        u_norms,
        dt_v_norm,
        spectrum_sup: v.spectrum_sup(),
        split_low,
        split_high,
        orthogonality_residual,
        weighted_energy: opts
            .weight
            .map(|w| weighted_spectral_energy(v, |k, s| w.eval(k, s), t)),
    })
}

/// Running audit of the spectral sup bound
/// `|v(k,t)| <= S_0 + 2 L^{-n/2} (int ||u||^2)^{1/2} (int ||grad v||^2)^{1/2}`,
/// with the time integrals accumulated by trapezoids over the samples.
#[derive(Clone, Debug)]
pub struct SupBoundAudit {
    initial_sup: f64,
    prefactor: f64,
    last: Option<(f64, f64, f64)>,
    int_u: f64,
    int_grad_v: f64,
    /// Largest `spectrum_sup / bound` seen.
    pub worst_ratio: f64,
}

impl SupBoundAudit {
    /// `initial_sup` is either `sup |v0(k)|` or the discrete
    /// `L^{-n/2} ||v0||_1` (sum of sample magnitudes times cell volume).
    pub fn new(initial_sup: f64, box_length: f64, dim: usize) -> Self {
        Self {
            initial_sup,
            prefactor: 2.0 * box_length.powf(-(dim as f64) / 2.0),
            last: None,
            int_u: 0.0,
            int_grad_v: 0.0,
            worst_ratio: 0.0,
        }
    }

    /// Adds a sample and returns `(spectrum_sup, bound)` at that time.
    pub fn push(&mut self, rec: &DiagnosticsRecord) -> (f64, f64) {
        let (u2, gv2) = (rec.u_norms[0], rec.v_norms[1]);
        if let Some((t0, u0, g0)) = self.last {
            let h = rec.t - t0;
            self.int_u += 0.5 * h * (u0 + u2);
            self.int_grad_v += 0.5 * h * (g0 + gv2);
        }
        self.last = Some((rec.t, u2, gv2));
        let bound = self.bound();
        if bound > 0.0 {
            self.worst_ratio = self.worst_ratio.max(rec.spectrum_sup / bound);
        }
        (rec.spectrum_sup, bound)
    }

    pub fn bound(&self) -> f64 {
        self.initial_sup + self.prefactor * (self.int_u * self.int_grad_v).sqrt()
    }
}

/// Discrete `L^{-n/2} ||v||_1` from physical samples.
pub fn l1_sup_estimate(v: &SpectralVectorField) -> Result<f64> {
    let grid = v.grid();
    let samples = crate::spectral::transform_backward(v)?;
    let mut sum = 0.0;
    for p in 0..grid.physical_len() {
        sum += samples.iter().map(|c| c[p] * c[p]).sum::<f64>().sqrt();
    }
    Ok(sum * grid.cell_volume() * grid.volume().powf(-0.5))
}
