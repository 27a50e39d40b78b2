//! Difference kernels: analytic references, sum-of-exponentials (Prony)
//! compressions, positivity checks and approximation-error reports.

mod analytic;
mod builtin;
mod prony;

use serde::Serialize;

pub use analytic::AnalyticKernel;
pub use builtin::{is_tabulated, load_builtin_prony, supported_betas, TABULATED};
pub use prony::{PronySeries, PronyTerm};

use crate::error::{Error, Result};

/// Default left end of sampling windows; derivatives of `exp(-t^beta)` blow up at 0.
pub const DEFAULT_T_MIN: f64 = 1e-3;

/// A memory kernel `k(t)`, `t >= 0`.
pub trait Kernel {
    fn eval(&self, t: f64) -> Result<f64>;

    /// Checks the sufficient positive-type condition `k >= 0, k' <= 0, k'' >= 0`.
    fn positive_type(&self, window: &SampleWindow) -> PositiveTypeReport;

    fn describe(&self) -> String;
}

/// Log-spaced sample points on `[t_min, t_max]`, `t_min > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleWindow {
    t_min: f64,
    t_max: f64,
    samples: usize,
}

impl SampleWindow {
    pub fn new(t_min: f64, t_max: f64, samples: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return Err(Error::Domain(format!(
                "sampling window needs 0 < t_min < t_max, got [{t_min}, {t_max}]"
            )));
        }
        if samples < 2 {
            return Err(Error::Domain(format!(
                "sampling window needs at least 2 samples, got {samples}"
            )));
        }
        Ok(Self {
            t_min,
            t_max,
            samples,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// `t_min * (t_max / t_min)^(i / (samples - 1))`, with both ends exact.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let ratio = self.t_max / self.t_min;
        let last = self.samples - 1;
        (0..self.samples).map(move |i| {
            if i == last {
                self.t_max
            } else {
                self.t_min * ratio.powf(i as f64 / last as f64)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelCondition {
    Nonnegative,
    NonIncreasing,
    Convex,
    /// A Prony term with `a <= 0` or `b < 0`.
    TermSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    /// Sample time at which the condition failed (sampled checks).
    pub t: Option<f64>,
    /// Zero-based offending term (Prony checks).
    pub term: Option<usize>,
    pub condition: KernelCondition,
    /// Value that broke the condition: `k`, `k'` or `k''` estimate.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositiveTypeReport {
    pub holds: bool,
    pub violation: Option<Violation>,
}

impl PositiveTypeReport {
    pub(crate) fn holds() -> Self {
        Self {
            holds: true,
            violation: None,
        }
    }

    pub(crate) fn violated_by_term(term: usize) -> Self {
        Self {
            holds: false,
            violation: Some(Violation {
                t: None,
                term: Some(term),
                condition: KernelCondition::TermSign,
                value: f64::NAN,
            }),
        }
    }
}

/// Samples `k >= 0`, `k' <= 0`, `k'' >= 0` with centered differences of
/// relative step `1e-3`. Each test allows the rounding noise of its stencil.
pub(crate) fn sampled_positive_type(
    k: impl Fn(f64) -> f64,
    window: &SampleWindow,
) -> PositiveTypeReport {
    const REL_STEP: f64 = 1e-3;
    let eps = f64::EPSILON;
    for t in window.points() {
        let h = REL_STEP * t;
        let k0 = k(t);
        let kp = k(t + h);
        let km = k(t - h);
        let d1 = (kp - km) / (2.0 * h);
        let d2 = (kp - 2.0 * k0 + km) / (h * h);
        let scale = k0.abs().max(kp.abs()).max(km.abs());
        let checks = [
            (KernelCondition::Nonnegative, k0, k0 >= 0.0),
            (KernelCondition::NonIncreasing, d1, d1 <= 8.0 * eps * scale / h),
            (KernelCondition::Convex, d2, d2 >= -16.0 * eps * scale / (h * h)),
        ];
        if let Some(&(condition, value, _)) = checks.iter().find(|c| !c.2) {
            return PositiveTypeReport {
                holds: false,
                violation: Some(Violation {
                    t: Some(t),
                    term: None,
                    condition,
                    value,
                }),
            };
        }
    }
    PositiveTypeReport::holds()
}

pub fn check_positive_type(kernel: &dyn Kernel, window: &SampleWindow) -> PositiveTypeReport {
    kernel.positive_type(window)
}

/// Pointwise `approx(t) - reference(t)` over a sample window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelErrorReport {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub sup_norm: f64,
}

impl KernelErrorReport {
    /// Sample time at which `|error|` is largest (first one on ties).
    pub fn argmax(&self) -> f64 {
        let mut best = (self.times[0], self.errors[0].abs());
        for (&t, &e) in self.times.iter().zip(&self.errors) {
            if e.abs() > best.1 {
                best = (t, e.abs());
            }
        }
        best.0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,error\n");
        for (t, e) in self.times.iter().zip(&self.errors) {
            out.push_str(&format!("{t:.16e},{e:.16e}\n"));
        }
        out
    }
}

/// Samples the approximation error `approx - reference` on a log-spaced window.
pub fn kernel_sup_error(
    reference: &dyn Kernel,
    approx: &dyn Kernel,
    window: &SampleWindow,
) -> Result<KernelErrorReport> {
    let mut times = Vec::with_capacity(window.samples());
    let mut errors = Vec::with_capacity(window.samples());
    for t in window.points() {
        times.push(t);
        errors.push(approx.eval(t)? - reference.eval(t)?);
    }
    let sup_norm = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(KernelErrorReport {
        times,
        errors,
        sup_norm,
    })
}
