//! Two-level weighted time stepping for the compressed-memory system
//!
//! ```text
//! dv/dt + sum_i a_i A v_i = phi,    dv_i/dt + b_i v_i - v = 0,
//! v(0) = u0,  v_i(0) = 0,
//! ```
//!
//! together with a full-history quadrature baseline for the original
//! convolution form, the discrete energy, and a closed-form scalar oracle.

mod history;
mod oracle;
mod soe;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CgSettings, Grid2D, GridFunction, SpdOperator};
use crate::kernels::PronySeries;

pub use history::{
    quadrature_init, quadrature_step, HistoryKernel, HistoryState, QuadratureRule,
};
pub use oracle::scalar_ode_oracle;
pub use soe::{
    auxiliary_residuals, energy, general_step, soe_init, soe_step, stiff_terms, SoeState,
    AUX_RESIDUAL_TOL,
};

/// How `phi^{n+sigma}` is formed from the forcing supplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingEvaluation {
    /// `phi(t^n + sigma tau)`.
    #[default]
    Point,
    /// `sigma phi(t^{n+1}) + (1 - sigma) phi(t^n)`.
    Blend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Weight `sigma` in `(0, 1]`; 0.5 is Crank-Nicolson, 1 is backward Euler.
    pub sigma: f64,
    pub tau: f64,
    pub n_steps: usize,
    pub solver: CgSettings,
    pub forcing: ForcingEvaluation,
}

impl SchemeConfig {
    pub fn new(sigma: f64, tau: f64, n_steps: usize) -> Result<Self> {
        let cfg = Self {
            sigma,
            tau,
            n_steps,
            solver: CgSettings::default(),
            forcing: ForcingEvaluation::Point,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `n_steps` uniform steps covering `[0, final_time]`.
    pub fn covering(sigma: f64, final_time: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::config("scheme.steps", "must be >= 1"));
        }
        Self::new(sigma, final_time / n_steps as f64, n_steps)
    }

    pub fn with_solver(mut self, solver: CgSettings) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::config(
                "scheme.sigma",
                format!("sigma must lie in (0,1], got {}", self.sigma),
            ));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config(
                "scheme.tau",
                format!("tau must be > 0, got {}", self.tau),
            ));
        }
        if self.n_steps == 0 {
            return Err(Error::config("scheme.steps", "must be >= 1"));
        }
        self.solver.validate()
    }

    /// Energy stability holds for every step size when `sigma >= 1/2`.
    pub fn is_unconditionally_stable(&self) -> bool {
        self.sigma >= 0.5
    }

    pub fn final_time(&self) -> f64 {
        self.n_steps as f64 * self.tau
    }
}

/// Time-dependent right-hand side `phi(t)`.
pub type Forcing = Arc<dyn Fn(f64) -> GridFunction + Send + Sync>;

/// `B du/dt + int_0^t k(t-s) A u(s) ds + C u = phi`, `u(0) = u0`, with a Prony kernel.
#[derive(Clone)]
pub struct ProblemSpec {
    a: SpdOperator,
    b: SpdOperator,
    c: SpdOperator,
    kernel: PronySeries,
    forcing: Option<Forcing>,
    u0: GridFunction,
}

impl ProblemSpec {
    /// Plain problem with `B = I`, `C = 0` and no forcing.
    pub fn new(a: SpdOperator, kernel: PronySeries, u0: GridFunction) -> Result<Self> {
        let spec = Self {
            a,
            b: SpdOperator::Identity,
            c: SpdOperator::Zero,
            kernel,
            forcing: None,
            u0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_mass(mut self, b: SpdOperator) -> Result<Self> {
        self.b = b;
        self.validate()?;
        Ok(self)
    }

    pub fn with_reaction(mut self, c: SpdOperator) -> Result<Self> {
        self.c = c;
        self.validate()?;
        Ok(self)
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.u0.grid();
        for (name, op) in [("A", &self.a), ("B", &self.b), ("C", &self.c)] {
            op.check_grid(grid)
                .map_err(|e| Error::Validation(format!("operator {name}: {e}")))?;
        }
        if !self.a.is_positive_definite() {
            return Err(Error::Validation("operator A must be positive definite".into()));
        }
        if !self.b.is_positive_definite() {
            return Err(Error::Validation("operator B must be positive definite".into()));
        }
        if !self.c.is_positive_semidefinite() {
            return Err(Error::Validation(
                "operator C must be positive semidefinite".into(),
            ));
        }
        Ok(())
    }

    pub fn a(&self) -> &SpdOperator {
        &self.a
    }

    pub fn b(&self) -> &SpdOperator {
        &self.b
    }

    pub fn c(&self) -> &SpdOperator {
        &self.c
    }

    pub fn kernel(&self) -> &PronySeries {
        &self.kernel
    }

    pub fn u0(&self) -> &GridFunction {
        &self.u0
    }

    pub fn grid(&self) -> &Grid2D {
        self.u0.grid()
    }

    /// True when `B = I` and `C = 0`, the case handled by [`soe_step`].
    pub fn is_plain(&self) -> bool {
        self.b.is_identity() && self.c.is_zero()
    }

    pub fn has_forcing(&self) -> bool {
        self.forcing.is_some()
    }

    /// `phi^{n+sigma}` for the step starting at `t`, or `None` without forcing.
    pub(crate) fn forcing_for_step(&self, cfg: &SchemeConfig, t: f64) -> Result<Option<GridFunction>> {
        let Some(f) = &self.forcing else {
            return Ok(None);
        };
        let phi = match cfg.forcing {
            ForcingEvaluation::Point => f(t + cfg.sigma * cfg.tau),
            ForcingEvaluation::Blend => {
                let mut next = f(t + cfg.tau).scaled(cfg.sigma);
                next.axpy(1.0 - cfg.sigma, &f(t))?;
                next
            }
        };
        phi.check_same_grid(&self.u0)?;
        Ok(Some(phi))
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("c", &self.c)
            .field("kernel", &self.kernel)
            .field("forcing", &self.forcing.as_ref().map(|_| "<fn>"))
            .field("grid", self.u0.grid())
            .finish()
    }
}
