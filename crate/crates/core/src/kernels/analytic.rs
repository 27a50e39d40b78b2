use serde::{Deserialize, Serialize};

use super::{sampled_positive_type, Kernel, PositiveTypeReport, PronySeries, SampleWindow};
use crate::error::{Error, Result};

/// Closed-form kernels used as references for the compressed ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticKernel {
    /// `exp(-t^beta)`, `0 < beta < 1`.
    StretchedExponential { beta: f64 },
    /// `weight * exp(-rate * t)`, both positive.
    SingleExponential { weight: f64, rate: f64 },
}

impl AnalyticKernel {
    pub fn stretched_exponential(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Validation(format!(
                "stretched exponential needs 0 < beta < 1, got {beta}"
            )));
        }
        Ok(Self::StretchedExponential { beta })
    }

    pub fn single_exponential(weight: f64, rate: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(Error::Validation(format!(
                "single exponential needs a > 0 and b > 0, got a = {weight}, b = {rate}"
            )));
        }
        Ok(Self::SingleExponential { weight, rate })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!(
                "kernel evaluated at t = {t}, need t >= 0"
            )));
        }
        Ok(self.eval_nonneg(t))
    }

    pub(crate) fn eval_nonneg(&self, t: f64) -> f64 {
        match *self {
            Self::StretchedExponential { beta } => (-t.powf(beta)).exp(),
            Self::SingleExponential { weight, rate } => weight * (-rate * t).exp(),
        }
    }

    /// The exact one-term Prony series of a single exponential.
    pub fn to_prony(&self) -> Option<PronySeries> {
        match *self {
            Self::SingleExponential { weight, rate } => PronySeries::single(weight, rate).ok(),
            Self::StretchedExponential { .. } => None,
        }
    }
}

impl Kernel for AnalyticKernel {
    fn eval(&self, t: f64) -> Result<f64> {
        AnalyticKernel::eval(self, t)
    }

    fn positive_type(&self, window: &SampleWindow) -> PositiveTypeReport {
        sampled_positive_type(|t| self.eval_nonneg(t), window)
    }

    fn describe(&self) -> String {
        match *self {
            Self::StretchedExponential { beta } => format!("exp(-t^{beta})"),
            Self::SingleExponential { weight, rate } => format!("{weight}*exp(-{rate}*t)"),
        }
    }
}
