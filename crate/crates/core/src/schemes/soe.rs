use super::{ProblemSpec, SchemeConfig};
use crate::error::{Error, Result};
use crate::grid::{a_norm, cg_solve, Grid2D, GridFunction, LinearOperator, SpdOperator};
use crate::kernels::PronySeries;

/// Bound on `tau ||r_i|| / (||v^{n+1}|| + ||v_i^{n+1}||)` for the auxiliary equations.
pub const AUX_RESIDUAL_TOL: f64 = 1e-12;

/// Discrete state `(v^n, v_1^n, ..., v_m^n)` at `t^n = n tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoeState {
    pub y: GridFunction,
    /// One auxiliary field per kernel term, in the order of [`PronySeries::terms`].
    pub aux: Vec<GridFunction>,
    pub n: usize,
    pub t: f64,
}

impl SoeState {
    pub fn grid(&self) -> &Grid2D {
        self.y.grid()
    }
}

/// `v^0 = u0`, `v_i^0 = 0`.
pub fn soe_init(problem: &ProblemSpec) -> SoeState {
    let grid = *problem.grid();
    SoeState {
        y: problem.u0().clone(),
        aux: vec![GridFunction::zeros(grid); problem.kernel().len()],
        n: 0,
        t: 0.0,
    }
}

/// Terms with `(1 - sigma) b_i tau > 1`, where the explicit part of the
/// auxiliary update changes sign and accuracy (not stability) degrades.
pub fn stiff_terms(kernel: &PronySeries, cfg: &SchemeConfig) -> Vec<usize> {
    kernel
        .terms()
        .iter()
        .enumerate()
        .filter(|(_, term)| (1.0 - cfg.sigma) * term.rate * cfg.tau > 1.0)
        .map(|(i, _)| i)
        .collect()
}

/// One step of the weighted scheme for `B = I`, `C = 0`.
pub fn soe_step(problem: &ProblemSpec, cfg: &SchemeConfig, state: &SoeState) -> Result<SoeState> {
    if !problem.is_plain() {
        return Err(Error::Validation(
            "soe_step needs B = I and C = 0; use general_step".into(),
        ));
    }
    advance(problem, cfg, state, None, None)
}

/// One step of the weighted scheme for `B dv/dt + sum_i a_i A v_i + C v = phi`.
///
/// Identity mass and zero reaction operators are skipped, so for `B = I`,
/// `C = 0` the result is bit-identical to [`soe_step`].
pub fn general_step(
    problem: &ProblemSpec,
    cfg: &SchemeConfig,
    state: &SoeState,
) -> Result<SoeState> {
    let mass = (!problem.b().is_identity()).then(|| problem.b());
    let reaction = (!problem.c().is_zero()).then(|| problem.c());
    advance(problem, cfg, state, mass, reaction)
}

fn advance(
    problem: &ProblemSpec,
    cfg: &SchemeConfig,
    state: &SoeState,
    mass: Option<&SpdOperator>,
    reaction: Option<&SpdOperator>,
) -> Result<SoeState> {
    cfg.validate()?;
    let kernel = problem.kernel();
    if state.aux.len() != kernel.len() {
        return Err(Error::Dimension(format!(
            "state has {} auxiliary fields, kernel has {} terms",
            state.aux.len(),
            kernel.len()
        )));
    }
    let grid = *problem.grid();
    state.y.check_same_grid(problem.u0())?;
    let (sigma, tau) = (cfg.sigma, cfg.tau);
    let y = state.y.values();

    // chi_i: the part of v_i^{n+1} that does not depend on v^{n+1}.
    let mut chi = Vec::with_capacity(kernel.len());
    let mut memory = vec![0.0; grid.len()];
    let mut mu = 0.0;
    for (term, yi) in kernel.terms().iter().zip(&state.aux) {
        yi.check_same_grid(&state.y)?;
        let denom = 1.0 + sigma * term.rate * tau;
        let c1 = (1.0 - sigma) * tau;
        let c2 = 1.0 - (1.0 - sigma) * term.rate * tau;
        let chi_i: Vec<f64> = y
            .iter()
            .zip(yi.values())
            .map(|(v, vi)| (c1 * v + c2 * vi) / denom)
            .collect();
        for ((m, vi), ci) in memory.iter_mut().zip(yi.values()).zip(&chi_i) {
            *m += term.weight * ((1.0 - sigma) * vi + sigma * ci);
        }
        mu += sigma * term.weight * tau / denom;
        chi.push(chi_i);
    }
    let a_memory = problem.a().apply(&GridFunction::from_values(grid, memory)?)?;

    let mut rhs = match mass {
        Some(b) => b.apply(&state.y)?,
        None => state.y.clone(),
    };
    if let Some(c) = reaction {
        rhs.axpy(-(1.0 - sigma) * tau, &c.apply(&state.y)?)?;
    }
    rhs.axpy(-tau, &a_memory)?;
    if let Some(phi) = problem.forcing_for_step(cfg, state.t)? {
        rhs.axpy(tau, &phi)?;
    }

    let op = StepOperator {
        mass,
        stiffness: problem.a(),
        reaction,
        stiffness_weight: mu,
        sigma_tau: sigma * tau,
    };
    let y_next = cg_solve(&op, &rhs, Some(&state.y), &cfg.solver)?.x;

    let mut aux = Vec::with_capacity(kernel.len());
    for (term, chi_i) in kernel.terms().iter().zip(chi) {
        let coupling = sigma * tau / (1.0 + sigma * term.rate * tau);
        let values = y_next
            .values()
            .iter()
            .zip(chi_i)
            .map(|(v, c)| coupling * v + c)
            .collect();
        aux.push(GridFunction::from_values(grid, values)?);
    }

    let next = SoeState {
        y: y_next,
        aux,
        n: state.n + 1,
        t: (state.n + 1) as f64 * tau,
    };
    debug_assert!(
        auxiliary_residuals(kernel, cfg, state, &next)
            .map(|r| r.iter().all(|&r| r <= AUX_RESIDUAL_TOL))
            .unwrap_or(false),
        "auxiliary equations not satisfied"
    );
    Ok(next)
}

/// Scaled residuals `tau ||r_i|| / (||v^{n+1}|| + ||v_i^{n+1}||)` of
/// `(v_i^{n+1} - v_i^n)/tau + b_i v_i^{n+sigma} - v^{n+sigma} = 0`, one per term.
pub fn auxiliary_residuals(
    kernel: &PronySeries,
    cfg: &SchemeConfig,
    old: &SoeState,
    new: &SoeState,
) -> Result<Vec<f64>> {
    if old.aux.len() != kernel.len() || new.aux.len() != kernel.len() {
        return Err(Error::Dimension(
            "auxiliary field count does not match the kernel".into(),
        ));
    }
    let (sigma, tau) = (cfg.sigma, cfg.tau);
    new.y.check_same_grid(&old.y)?;
    let y_norm = new.y.l2_norm();
    let mut out = Vec::with_capacity(kernel.len());
    for ((term, yi), yi_next) in kernel.terms().iter().zip(&old.aux).zip(&new.aux) {
        yi.check_same_grid(&old.y)?;
        yi_next.check_same_grid(&old.y)?;
        let values = (0..old.y.len())
            .map(|k| {
                let (v, v_next) = (old.y.values()[k], new.y.values()[k]);
                let (w, w_next) = (yi.values()[k], yi_next.values()[k]);
                (w_next - w) / tau + term.rate * (sigma * w_next + (1.0 - sigma) * w)
                    - (sigma * v_next + (1.0 - sigma) * v)
            })
            .collect();
        let r = GridFunction::from_values(*old.y.grid(), values)?.l2_norm();
        let scale = y_norm + yi_next.l2_norm();
        out.push(match (r == 0.0, scale == 0.0) {
            (true, _) => 0.0,
            (false, true) => f64::INFINITY,
            (false, false) => tau * r / scale,
        });
    }
    Ok(out)
}

/// `E = (||v||_B^2 + sum_i a_i ||v_i||_A^2)^(1/2)`, non-increasing for `sigma >= 1/2`
/// and `phi = 0`.
pub fn energy(problem: &ProblemSpec, state: &SoeState) -> Result<f64> {
    let mut e2 = a_norm(problem.b(), &state.y)?.powi(2);
    for (term, yi) in problem.kernel().terms().iter().zip(&state.aux) {
        e2 += term.weight * a_norm(problem.a(), yi)?.powi(2);
    }
    Ok(e2.sqrt())
}

/// `w -> M w + sigma tau (s A w + C w)` with `M = I` when `mass` is absent.
pub(super) struct StepOperator<'a> {
    pub mass: Option<&'a SpdOperator>,
    pub stiffness: &'a SpdOperator,
    pub reaction: Option<&'a SpdOperator>,
    pub stiffness_weight: f64,
    pub sigma_tau: f64,
}

impl LinearOperator for StepOperator<'_> {
    fn apply(&self, w: &GridFunction) -> Result<GridFunction> {
        let mut inner = self.stiffness.apply(w)?;
        inner.scale(self.stiffness_weight);
        if let Some(c) = self.reaction {
            inner.axpy(1.0, &c.apply(w)?)?;
        }
        let mut out = match self.mass {
            Some(b) => b.apply(w)?,
            None => w.clone(),
        };
        out.axpy(self.sigma_tau, &inner)?;
        Ok(out)
    }

    fn diagonal(&self, grid: &Grid2D) -> Option<Vec<f64>> {
        let mut d = match self.mass {
            Some(b) => b.diagonal(grid)?,
            None => vec![1.0; grid.len()],
        };
        let a = self.stiffness.diagonal(grid)?;
        let c = match self.reaction {
            Some(c) => c.diagonal(grid)?,
            None => vec![0.0; grid.len()],
        };
        for ((d, a), c) in d.iter_mut().zip(a).zip(c) {
            *d += self.sigma_tau * (self.stiffness_weight * a + c);
        }
        Some(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_function, Preconditioner};
    use crate::kernels::load_builtin_prony;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn scalar(a: f64, b: f64, lambda: f64, u0: f64) -> ProblemSpec {
        let g = Grid2D::square(2).unwrap();
        ProblemSpec::new(
            SpdOperator::diagonal_scaling(vec![lambda]).unwrap(),
            PronySeries::single(a, b).unwrap(),
            GridFunction::constant(g, u0),
        )
        .unwrap()
    }

    fn model(n: usize, beta: f64) -> ProblemSpec {
        let g = Grid2D::square(n).unwrap();
        let u0 = sample_function(g, |x, y| x * y * (PI * x).sin() * (PI * y).sin());
        ProblemSpec::new(SpdOperator::laplacian(g), load_builtin_prony(beta).unwrap(), u0).unwrap()
    }

    #[test]
    fn backward_euler_hand_check() {
        // sigma = 1, a = 1, b = 0, lambda = 1, tau = 1:
        // (1 + 1) y = 1, y_1 = y.
        let p = scalar(1.0, 0.0, 1.0, 1.0);
        let cfg = SchemeConfig::new(1.0, 1.0, 1).unwrap();
        let s = soe_step(&p, &cfg, &soe_init(&p)).unwrap();
        assert_eq!(s.y.values(), &[0.5]);
        assert_eq!(s.aux[0].values(), &[0.5]);
        assert_eq!((s.n, s.t), (1, 1.0));
    }

    #[test]
    fn zero_memory_keeps_state() {
        // A tiny weight makes the memory negligible; with B = 2I and C = 0 the field stays put.
        let g = Grid2D::square(4).unwrap();
        let u0 = sample_function(g, |x, y| x + y);
        let p = ProblemSpec::new(
            SpdOperator::constant_scaling(g, 1e-300).unwrap(),
            PronySeries::single(1e-300, 1.0).unwrap(),
            u0.clone(),
        )
        .unwrap()
        .with_mass(SpdOperator::constant_scaling(g, 2.0).unwrap())
        .unwrap();
        let cfg = SchemeConfig::new(1.0, 0.1, 1).unwrap();
        let s = general_step(&p, &cfg, &soe_init(&p)).unwrap();
        assert_eq!(s.y, u0);
    }

    #[test]
    fn reaction_only_matches_theta_scheme() {
        let g = Grid2D::square(2).unwrap();
        let p = ProblemSpec::new(
            SpdOperator::diagonal_scaling(vec![1e-14]).unwrap(),
            PronySeries::single(1e-14, 1.0).unwrap(),
            GridFunction::constant(g, 1.0),
        )
        .unwrap()
        .with_reaction(SpdOperator::Identity)
        .unwrap();
        for sigma in [0.5, 1.0] {
            let cfg = SchemeConfig::new(sigma, 0.01, 100).unwrap();
            let factor = (1.0 - (1.0 - sigma) * cfg.tau) / (1.0 + sigma * cfg.tau);
            let mut s = soe_init(&p);
            let mut expected = 1.0;
            for _ in 0..cfg.n_steps {
                s = general_step(&p, &cfg, &s).unwrap();
                expected *= factor;
            }
            assert!((s.y.values()[0] - expected).abs() < 1e-12);
            assert!((s.y.values()[0] - (-1.0f64).exp()).abs() < 1e-2);
        }
    }

    #[test]
    fn general_reduces_bitwise() {
        let p = model(8, 0.5);
        let cfg = SchemeConfig::new(0.5, 0.05, 3).unwrap();
        let mut a = soe_init(&p);
        let mut b = soe_init(&p);
        for _ in 0..cfg.n_steps {
            a = soe_step(&p, &cfg, &a).unwrap();
            b = general_step(&p, &cfg, &b).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn soe_step_rejects_general_problems() {
        let p = model(4, 0.5).with_reaction(SpdOperator::Identity).unwrap();
        let cfg = SchemeConfig::new(0.5, 0.1, 1).unwrap();
        assert!(matches!(soe_step(&p, &cfg, &soe_init(&p)), Err(Error::Validation(_))));
    }

    #[test]
    fn jacobi_agrees() {
        let p = model(8, 0.5);
        let cfg = SchemeConfig::new(0.75, 0.1, 1).unwrap();
        let mut jac = cfg;
        jac.solver.preconditioner = Preconditioner::Jacobi;
        let a = soe_step(&p, &cfg, &soe_init(&p)).unwrap();
        let b = soe_step(&p, &jac, &soe_init(&p)).unwrap();
        assert!(a.y.sub(&b.y).unwrap().max_abs() < 1e-9 * a.y.max_abs());
    }

    #[test]
    fn stiff_term_detection() {
        let k = PronySeries::from_pairs(&[(0.5, 1.0), (0.5, 100.0)]).unwrap();
        let cfg = SchemeConfig::new(0.5, 0.1, 1).unwrap();
        assert_eq!(stiff_terms(&k, &cfg), vec![1]);
        assert!(stiff_terms(&k, &SchemeConfig::new(1.0, 0.1, 1).unwrap()).is_empty());
    }

    #[test]
    fn residuals_are_small() {
        let p = model(8, 3.0 / 7.0);
        let cfg = SchemeConfig::new(0.5, 0.3, 1).unwrap();
        let s0 = soe_init(&p);
        let s1 = soe_step(&p, &cfg, &s0).unwrap();
        let r = auxiliary_residuals(p.kernel(), &cfg, &s0, &s1).unwrap();
        assert_eq!(r.len(), 12);
        assert!(r.iter().all(|&r| r <= AUX_RESIDUAL_TOL), "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn energy_never_increases(
            sigma in 0.5f64..=1.0,
            log_tau in -3.0f64..1.0,
            beta_idx in 0usize..3,
        ) {
            let beta = crate::kernels::supported_betas()[beta_idx];
            let p = model(6, beta);
            let cfg = SchemeConfig::new(sigma, 10f64.powf(log_tau), 5).unwrap();
            let mut s = soe_init(&p);
            let mut e = energy(&p, &s).unwrap();
            for _ in 0..cfg.n_steps {
                s = soe_step(&p, &cfg, &s).unwrap();
                let e_next = energy(&p, &s).unwrap();
                prop_assert!(e_next <= e * (1.0 + 1e-8), "{e_next} > {e}");
                e = e_next;
            }
        }
    }
}
