//! Least-squares power-law fits in `log(1 + t)`.

use serde::Serialize;

use crate::error::{HarnessError, Result};

pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub norm_id: String,
    pub window: (f64, f64),
    /// `d log N / d log(1 + t)`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Ordinary least squares `y = slope x + intercept`, with `r^2`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

/// Fits `log value = slope log(1 + t) + intercept` over samples with
/// `t_a <= t <= t_b`.
pub fn fit_decay_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    fit_with_min(series, window, MIN_FIT_SAMPLES)
}

pub fn fit_with_min(series: &[(f64, f64)], window: (f64, f64), min_samples: usize) -> Result<DecayFit> {
    let (t_a, t_b) = window;
    if !(t_a > 0.0 && t_b > t_a) {
        return Err(HarnessError::Fit(format!("window ({t_a}, {t_b}) needs t_b > t_a > 0")));
    }
    let tol = 1e-9 * t_b;
    let inside: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= t_a - tol && *t <= t_b + tol)
        .collect();
    if inside.len() < min_samples.max(2) {
        return Err(HarnessError::Fit(format!(
            "{} samples in window ({t_a}, {t_b}); need at least {}",
            inside.len(),
            min_samples.max(2)
        )));
    }
    if let Some((t, v)) = inside.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(HarnessError::Fit(format!("non-positive value {v} at t = {t}")));
    }
    let xs: Vec<f64> = inside.iter().map(|(t, _)| t.ln_1p()).collect();
    let ys: Vec<f64> = inside.iter().map(|(_, v)| v.ln()).collect();
    let (slope, intercept, r_squared) = fit_line(&xs, &ys);
    Ok(DecayFit {
        norm_id: String::new(),
        window,
        slope,
        intercept,
        r_squared,
        samples: inside.len(),
    })
}
