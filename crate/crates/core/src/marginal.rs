//! Common component lifetime distribution.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarginalError {
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("survival probability must lie in (0, 1], got {0}")]
    OutOfRange(f64),
    #[error("invalid marginal parameters: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    /// `F̄(t) = exp(−t/μ)`.
    Exponential { mean: f64 },
    /// `F̄(t) = exp(−(t/λ)^k)`.
    Weibull { shape: f64, scale: f64 },
}

impl Marginal {
    pub fn exponential(mean: f64) -> Result<Self, MarginalError> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(MarginalError::InvalidParameter(format!(
                "mean must be positive, got {mean}"
            )));
        }
        Ok(Self::Exponential { mean })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self, MarginalError> {
        if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(MarginalError::InvalidParameter(format!(
                "Weibull shape and scale must be positive, got k = {shape}, λ = {scale}"
            )));
        }
        Ok(Self::Weibull { shape, scale })
    }

    /// Survival function `F̄(t)`.
    pub fn sf(&self, t: f64) -> Result<f64, MarginalError> {
        if t < 0.0 || t.is_nan() {
            return Err(MarginalError::NegativeTime(t));
        }
        Ok(self.sf_unchecked(t))
    }

    /// Inverse survival function: the unique `t` with `F̄(t) = p`.
    pub fn inv_sf(&self, p: f64) -> Result<f64, MarginalError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(MarginalError::OutOfRange(p));
        }
        Ok(self.inv_sf_unchecked(p))
    }

    /// Density `f(t) = −F̄'(t)`.
    pub fn pdf(&self, t: f64) -> Result<f64, MarginalError> {
        if t < 0.0 || t.is_nan() {
            return Err(MarginalError::NegativeTime(t));
        }
        Ok(self.pdf_unchecked(t))
    }

    /// Distribution function `F(t) = 1 − F̄(t)`, computed without cancellation.
    pub fn cdf(&self, t: f64) -> Result<f64, MarginalError> {
        if t < 0.0 || t.is_nan() {
            return Err(MarginalError::NegativeTime(t));
        }
        Ok(match *self {
            Self::Exponential { mean } => -(-t / mean).exp_m1(),
            Self::Weibull { shape, scale } => -(-(t / scale).powf(shape)).exp_m1(),
        })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { mean } => mean,
            Self::Weibull { shape, scale } => {
                scale * crate::numeric::ln_gamma(1.0 + 1.0 / shape).exp()
            }
        }
    }

    pub(crate) fn sf_unchecked(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential { mean } => (-t / mean).exp(),
            Self::Weibull { shape, scale } => (-(t / scale).powf(shape)).exp(),
        }
    }

    pub(crate) fn inv_sf_unchecked(&self, p: f64) -> f64 {
        let h = -p.ln();
        match *self {
            Self::Exponential { mean } => mean * h,
            Self::Weibull { shape, scale } => scale * h.powf(1.0 / shape),
        }
    }

    pub(crate) fn pdf_unchecked(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential { mean } => (-t / mean).exp() / mean,
            Self::Weibull { shape, scale } => {
                let z = t / scale;
                shape / scale * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
            }
        }
    }

    /// Density at the time where the survival function equals `p`, i.e.
    /// `f(F̄⁻¹(p))`; the Jacobian of the substitution `z = F̄(y)`.
    pub(crate) fn pdf_at_level(&self, p: f64) -> f64 {
        match *self {
            Self::Exponential { mean } => p / mean,
            Self::Weibull { shape, scale } => {
                let h = -p.ln();
                shape / scale * h.powf(1.0 - 1.0 / shape) * p
            }
        }
    }
}
