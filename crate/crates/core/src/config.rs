//! Run configuration: a flat JSON object with dotted keys. Every key has a
//! default, unknown keys are rejected, and `meta.*` keys are ignored so a
//! written manifest can be fed back as a configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::experiments::{ExperimentSpec, KernelChoice};
use crate::grid::{CgSettings, Preconditioner};
use crate::kernels::{is_tabulated, AnalyticKernel, PronySeries, SampleWindow};
use crate::schemes::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelReference {
    /// Compare the Prony kernel with `exp(-t^beta)`.
    #[default]
    Analytic,
    /// Compare the Prony kernel with itself.
    #[serde(rename = "self")]
    SelfCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "kernel.beta")]
    pub beta: f64,
    #[serde(rename = "kernel.file")]
    pub kernel_file: Option<PathBuf>,
    #[serde(rename = "grid.n")]
    pub grid_n: usize,
    #[serde(rename = "time.final")]
    pub final_time: f64,
    #[serde(rename = "scheme.sigma")]
    pub sigma: f64,
    #[serde(rename = "scheme.tau")]
    pub tau: Option<f64>,
    #[serde(rename = "scheme.steps")]
    pub steps: Option<usize>,
    #[serde(rename = "study.ladder")]
    pub ladder: Vec<usize>,
    #[serde(rename = "study.reference_steps")]
    pub reference_steps: usize,
    #[serde(rename = "solver.tol")]
    pub solver_tol: f64,
    #[serde(rename = "solver.max_iter")]
    pub solver_max_iter: Option<usize>,
    #[serde(rename = "solver.jacobi")]
    pub solver_jacobi: bool,
    #[serde(rename = "kernel_error.t_min")]
    pub kernel_error_t_min: f64,
    #[serde(rename = "kernel_error.t_max")]
    pub kernel_error_t_max: f64,
    #[serde(rename = "kernel_error.samples")]
    pub kernel_error_samples: usize,
    #[serde(rename = "kernel_error.against")]
    pub kernel_error_against: KernelReference,
    #[serde(rename = "problem.zero_initial")]
    pub zero_initial: bool,
    #[serde(rename = "baseline.rule")]
    pub baseline_rule: QuadratureRule,
    #[serde(rename = "output.dir")]
    pub output_dir: Option<PathBuf>,
    pub deterministic: bool,
}

/// Steps of a single run when neither `scheme.tau` nor `scheme.steps` is given.
pub const DEFAULT_STEPS: usize = 1000;

impl Default for RunConfig {
    fn default() -> Self {
        let spec = ExperimentSpec::default();
        Self {
            beta: 0.5,
            kernel_file: None,
            grid_n: spec.grid_n,
            final_time: spec.final_time,
            sigma: spec.sigma,
            tau: None,
            steps: None,
            ladder: spec.ladder,
            reference_steps: spec.reference_steps,
            solver_tol: CgSettings::default().tol,
            solver_max_iter: None,
            solver_jacobi: false,
            kernel_error_t_min: 0.1,
            kernel_error_t_max: 10.0,
            kernel_error_samples: 1000,
            kernel_error_against: KernelReference::Analytic,
            zero_initial: false,
            baseline_rule: QuadratureRule::Product,
            output_dir: None,
            deterministic: true,
        }
    }
}

impl RunConfig {
    /// Applies the keys of `value` over the defaults.
    pub fn from_json_value(value: Value) -> Result<Self> {
        let Value::Object(given) = value else {
            return Err(Error::config("<root>", "configuration must be a JSON object"));
        };
        let Value::Object(mut merged) = serde_json::to_value(Self::default())? else {
            unreachable!("config serializes to an object")
        };
        for (key, value) in given {
            if key.starts_with("meta.") {
                continue;
            }
            if !merged.contains_key(&key) {
                return Err(Error::config(key, "unknown configuration key"));
            }
            let previous = merged.insert(key.clone(), value);
            if let Err(e) = serde_json::from_value::<Self>(Value::Object(merged.clone())) {
                merged.insert(key.clone(), previous.expect("key existed"));
                return Err(Error::config(key, e.to_string()));
            }
        }
        Ok(serde_json::from_value(Value::Object(merged))?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::config("<file>", e.to_string()))?;
        Self::from_json_value(value)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Resolves `scheme.tau` / `scheme.steps` against `time.final` and checks every field.
    pub fn resolve(mut self) -> Result<Self> {
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::config(
                "time.final",
                format!("must be > 0, got {}", self.final_time),
            ));
        }
        let steps = match (self.tau, self.steps) {
            (None, None) => DEFAULT_STEPS,
            (None, Some(n)) => n,
            (Some(tau), steps) => {
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(Error::config("scheme.tau", format!("tau must be > 0, got {tau}")));
                }
                let ratio = self.final_time / tau;
                let n = ratio.round();
                if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
                    return Err(Error::config(
                        "scheme.tau",
                        format!("T / tau = {ratio} is not a whole number of steps"),
                    ));
                }
                let n = n as usize;
                if let Some(s) = steps.filter(|&s| s != n) {
                    return Err(Error::config(
                        "scheme.steps",
                        format!("{s} steps disagree with tau = {tau} (T / tau = {n})"),
                    ));
                }
                n
            }
        };
        if steps == 0 {
            return Err(Error::config("scheme.steps", "must be >= 1"));
        }
        self.steps = Some(steps);
        self.tau = Some(self.final_time / steps as f64);
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::config(
                "scheme.sigma",
                format!("sigma must lie in (0,1], got {}", self.sigma),
            ));
        }
        if self.kernel_file.is_none() && !is_tabulated(self.beta) {
            return Err(Error::config(
                "kernel.beta",
                format!(
                    "no tabulated kernel for beta = {}; supported values are 3/7, 1/2, 3/5, or pass --kernel-file",
                    self.beta
                ),
            ));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config(
                "kernel.beta",
                format!("beta must lie in (0,1), got {}", self.beta),
            ));
        }
        self.solver().validate()?;
        self.window()
            .map_err(|e| Error::config("kernel_error.t_min", e.to_string()))?;
        self.experiment()?.validate()?;
        Ok(self)
    }

    pub fn solver(&self) -> CgSettings {
        CgSettings {
            tol: self.solver_tol,
            max_iter: self.solver_max_iter,
            preconditioner: if self.solver_jacobi {
                Preconditioner::Jacobi
            } else {
                Preconditioner::None
            },
        }
    }

    pub fn prony(&self) -> Result<PronySeries> {
        match &self.kernel_file {
            Some(path) => PronySeries::from_file(path),
            None => crate::kernels::load_builtin_prony(self.beta),
        }
    }

    pub fn analytic(&self) -> Result<AnalyticKernel> {
        AnalyticKernel::stretched_exponential(self.beta)
    }

    pub fn window(&self) -> Result<SampleWindow> {
        SampleWindow::new(
            self.kernel_error_t_min,
            self.kernel_error_t_max,
            self.kernel_error_samples,
        )
    }

    pub fn resolved_steps(&self) -> usize {
        self.steps.unwrap_or(DEFAULT_STEPS)
    }

    pub fn experiment(&self) -> Result<ExperimentSpec> {
        let kernel = match &self.kernel_file {
            Some(_) => KernelChoice::Custom(self.prony()?),
            None => KernelChoice::Builtin { beta: self.beta },
        };
        Ok(ExperimentSpec {
            kernel,
            grid_n: self.grid_n,
            final_time: self.final_time,
            sigma: self.sigma,
            steps: self.resolved_steps(),
            ladder: self.ladder.clone(),
            reference_steps: self.reference_steps,
            solver: self.solver(),
            zero_initial: self.zero_initial,
        })
    }

    /// Flat key map of every field.
    pub fn to_flat_map(&self) -> Result<Map<String, Value>> {
        match serde_json::to_value(self)? {
            Value::Object(map) => Ok(map),
            _ => unreachable!("config serializes to an object"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_resolve() {
        let cfg = RunConfig::default().resolve().unwrap();
        assert_eq!(cfg.steps, Some(1000));
        assert_eq!(cfg.tau, Some(0.01));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_json_value(json!({"scheme.sigmaa": 0.5})).unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "scheme.sigmaa"), "{err}");
    }

    #[test]
    fn wrong_types_name_the_field() {
        let err = RunConfig::from_json_value(json!({"grid.n": "big"})).unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "grid.n"), "{err}");
    }

    #[test]
    fn meta_keys_are_ignored() {
        let cfg = RunConfig::from_json_value(json!({"meta.version": "1", "grid.n": 8})).unwrap();
        assert_eq!(cfg.grid_n, 8);
    }

    #[test]
    fn tau_and_steps() {
        let mut cfg = RunConfig { tau: Some(0.01), final_time: 4.0, ..RunConfig::default() };
        assert_eq!(cfg.clone().resolve().unwrap().steps, Some(400));
        cfg.steps = Some(300);
        assert!(cfg.clone().resolve().is_err());
        cfg.steps = None;
        cfg.tau = Some(0.3);
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn untabulated_beta_needs_a_file() {
        let err = RunConfig { beta: 0.4, ..RunConfig::default() }.resolve().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("3/7, 1/2, 3/5") && msg.contains("--kernel-file"), "{msg}");
    }

    #[test]
    fn flat_map_round_trips() {
        let cfg = RunConfig { grid_n: 16, tau: Some(0.5), ..RunConfig::default() };
        let back = RunConfig::from_json_value(Value::Object(cfg.to_flat_map().unwrap())).unwrap();
        assert_eq!(back, cfg);
    }
}
