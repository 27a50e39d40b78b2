//! Full-history baseline: the convolution `int_0^t k(t-s) A u(s) ds` is
//! discretized directly with a trapezoid-type rule over every stored level,
//! so a step costs `O(n N)` and the state grows linearly in time.

use serde::{Deserialize, Serialize};

use super::soe::StepOperator;
use super::{ProblemSpec, SchemeConfig};
use crate::error::{Error, Result};
use crate::grid::{cg_solve, GridFunction, LinearOperator};
use crate::kernels::{AnalyticKernel, PronySeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// Exact kernel moments against piecewise-linear interpolation of `u`.
    #[default]
    Product,
    /// Trapezoid on the nodal values `k(t_n - t_j) A u^j`.
    Nodal,
}

/// Kernel used inside the history sum.
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryKernel {
    Prony(PronySeries),
    /// Moments by 8-point Gauss-Legendre on every step interval.
    Analytic(AnalyticKernel),
}

impl HistoryKernel {
    fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Prony(k) => k.eval_nonneg(t),
            Self::Analytic(k) => k.eval_nonneg(t),
        }
    }
}

/// Falling and rising hat moments of the kernel per lag interval:
/// `fall[p] = int_{p tau}^{(p+1) tau} k(r) (1 - (r - p tau)/tau) dr`,
/// `rise[p] = int_{p tau}^{(p+1) tau} k(r) (r - p tau)/tau dr`.
#[derive(Debug, Clone)]
struct LagWeights {
    rule: QuadratureRule,
    kernel: HistoryKernel,
    tau: f64,
    fall: Vec<f64>,
    rise: Vec<f64>,
}

impl LagWeights {
    fn ensure(&mut self, len: usize) {
        while self.fall.len() < len {
            let p = self.fall.len();
            let (f, r) = self.moments(p);
            self.fall.push(f);
            self.rise.push(r);
        }
    }

    fn moments(&self, p: usize) -> (f64, f64) {
        let tau = self.tau;
        let start = p as f64 * tau;
        match (self.rule, &self.kernel) {
            (QuadratureRule::Nodal, k) => (0.5 * tau * k.eval(start), 0.5 * tau * k.eval(start + tau)),
            (QuadratureRule::Product, HistoryKernel::Prony(k)) => {
                let (mut f, mut r) = (0.0, 0.0);
                for term in k.terms() {
                    let z = term.rate * tau;
                    let scale = term.weight * (-term.rate * start).exp();
                    let (pz, qz) = hat_moments(z);
                    f += scale * pz;
                    r += scale * qz;
                }
                (tau * f, tau * r)
            }
            (QuadratureRule::Product, HistoryKernel::Analytic(k)) => {
                let (mut f, mut r) = (0.0, 0.0);
                for (x, w) in GAUSS_LEGENDRE_8 {
                    for sign in [-1.0, 1.0] {
                        let u = 0.5 * (1.0 + sign * x);
                        let kv = k.eval_nonneg(start + u * tau);
                        f += 0.5 * w * kv * (1.0 - u);
                        r += 0.5 * w * kv * u;
                    }
                }
                (tau * f, tau * r)
            }
        }
    }

    /// `W_{n,j}` for the level `j` when the current level is `n >= 1`, `j < n`.
    fn weight(&self, n: usize, j: usize) -> f64 {
        let lag = n - j;
        if j == 0 {
            self.rise[lag - 1]
        } else {
            self.rise[lag - 1] + self.fall[lag]
        }
    }
}

/// `P(z) = int_0^1 e^{-z u} (1 - u) du`, `Q(z) = int_0^1 e^{-z u} u du`.
fn hat_moments(z: f64) -> (f64, f64) {
    if z < 1.0 {
        // Taylor series; the closed forms cancel catastrophically near 0.
        let (mut p, mut q, mut term) = (0.0, 0.0, 1.0);
        for k in 0..24 {
            let kf = k as f64;
            p += term / ((kf + 1.0) * (kf + 2.0));
            q += term / (kf + 2.0);
            term *= -z / (kf + 1.0);
        }
        (p, q)
    } else {
        let e = (-z).exp();
        let z2 = z * z;
        ((z - 1.0 + e) / z2, (1.0 - (1.0 + z) * e) / z2)
    }
}

/// Positive abscissae and weights of the 8-point Gauss-Legendre rule on `[-1, 1]`.
const GAUSS_LEGENDRE_8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Stored levels `u^0..u^n` and the last history sum `S_n = sum_j W_{n,j} u^j`.
#[derive(Debug, Clone)]
pub struct HistoryState {
    pub levels: Vec<GridFunction>,
    /// `S_n`, so that the memory term at `t^n` is `A S_n`.
    pub memory: GridFunction,
    pub n: usize,
    pub t: f64,
    weights: LagWeights,
}

impl HistoryState {
    pub fn y(&self) -> &GridFunction {
        self.levels.last().expect("history holds at least u^0")
    }

    pub fn rule(&self) -> QuadratureRule {
        self.weights.rule
    }

    /// Number of stored grid functions (levels plus the history sum).
    pub fn stored_fields(&self) -> usize {
        self.levels.len() + 1
    }
}

/// `u^0 = u0`; `kernel` overrides the problem's Prony kernel in the history sum.
pub fn quadrature_init(
    problem: &ProblemSpec,
    cfg: &SchemeConfig,
    rule: QuadratureRule,
    kernel: Option<HistoryKernel>,
) -> Result<HistoryState> {
    cfg.validate()?;
    let kernel = kernel.unwrap_or_else(|| HistoryKernel::Prony(problem.kernel().clone()));
    Ok(HistoryState {
        levels: vec![problem.u0().clone()],
        memory: GridFunction::zeros(*problem.grid()),
        n: 0,
        t: 0.0,
        weights: LagWeights {
            rule,
            kernel,
            tau: cfg.tau,
            fall: Vec::new(),
            rise: Vec::new(),
        },
    })
}

/// One weighted step of the full-history scheme:
/// `B (u^{n+1} - u^n)/tau + sigma A S_{n+1} + (1 - sigma) A S_n + C u^{n+sigma} = phi^{n+sigma}`.
pub fn quadrature_step(
    problem: &ProblemSpec,
    cfg: &SchemeConfig,
    mut state: HistoryState,
) -> Result<HistoryState> {
    cfg.validate()?;
    if state.weights.tau != cfg.tau {
        return Err(Error::Validation(format!(
            "history was built for tau = {}, step uses tau = {}",
            state.weights.tau, cfg.tau
        )));
    }
    let (sigma, tau) = (cfg.sigma, cfg.tau);
    let grid = *problem.grid();
    let n = state.n;
    state.weights.ensure(n + 2);

    // S_{n+1} without its u^{n+1} contribution.
    let mut partial = GridFunction::zeros(grid);
    for (j, level) in state.levels.iter().enumerate() {
        partial.axpy(state.weights.weight(n + 1, j), level)?;
    }
    let w_end = state.weights.fall[0];

    let mut blend = partial.scaled(sigma);
    blend.axpy(1.0 - sigma, &state.memory)?;
    let y = state.y();
    let mass = (!problem.b().is_identity()).then(|| problem.b());
    let reaction = (!problem.c().is_zero()).then(|| problem.c());
    let mut rhs = match mass {
        Some(b) => b.apply(y)?,
        None => y.clone(),
    };
    if let Some(c) = reaction {
        rhs.axpy(-(1.0 - sigma) * tau, &c.apply(y)?)?;
    }
    rhs.axpy(-tau, &problem.a().apply(&blend)?)?;
    if let Some(phi) = problem.forcing_for_step(cfg, state.t)? {
        rhs.axpy(tau, &phi)?;
    }

    let op = StepOperator {
        mass,
        stiffness: problem.a(),
        reaction,
        stiffness_weight: w_end,
        sigma_tau: sigma * tau,
    };
    let y_next = cg_solve(&op, &rhs, Some(y), &cfg.solver)?.x;

    partial.axpy(w_end, &y_next)?;
    state.memory = partial;
    state.levels.push(y_next);
    state.n = n + 1;
    state.t = (n + 1) as f64 * tau;
    Ok(state)
}
