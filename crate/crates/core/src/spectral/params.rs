use crate::error::{FlowError, Result};

/// Physical constants of the model and the dealiasing rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub nu: f64,
    /// Filter length; zero selects the Navier-Stokes equations.
    pub alpha: f64,
    /// Fraction of the Nyquist radius retained by dealiasing.
    pub dealias_fraction: f64,
}

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

impl ModelParams {
    pub fn new(nu: f64, alpha: f64) -> Result<Self> {
        Self::with_dealias(nu, alpha, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(nu: f64, alpha: f64, dealias_fraction: f64) -> Result<Self> {
        let p = Self {
            nu,
            alpha,
            dealias_fraction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(FlowError::InvalidParameter(format!("nu must be > 0, got {}", self.nu)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(FlowError::InvalidParameter(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(FlowError::InvalidParameter(format!(
                "dealias_fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        Ok(())
    }
}
