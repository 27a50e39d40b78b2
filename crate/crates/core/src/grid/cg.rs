use serde::{Deserialize, Serialize};

use super::{dot, GridFunction, LinearOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    #[default]
    None,
    /// Diagonal scaling by the inverse of the operator diagonal.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgSettings {
    /// Relative residual target `||b - Ax|| <= tol ||b||`.
    pub tol: f64,
    /// `None` means `10 (N1 + N2)` for the grid of the right-hand side.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            preconditioner: Preconditioner::None,
        }
    }
}

impl CgSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config("solver.tol", format!("must be > 0, got {}", self.tol)));
        }
        if self.max_iter == Some(0) {
            return Err(Error::config("solver.max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: GridFunction,
    pub iterations: usize,
    /// Final `||b - Ax|| / ||b||`, recomputed from the returned `x`.
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive definite operator.
///
/// Starts from `x0` (zero if absent). A non-positive curvature `(p, Ap) <= 0`
/// is reported as [`Error::NotSpd`]. Convergence is confirmed on the true
/// residual; if the recursive residual has drifted the iteration restarts
/// from it.
pub fn cg_solve(
    op: &dyn LinearOperator,
    rhs: &GridFunction,
    x0: Option<&GridFunction>,
    settings: &CgSettings,
) -> Result<CgSolution> {
    settings.validate()?;
    let grid = *rhs.grid();
    let max_iter = settings.max_iter.unwrap_or(10 * (grid.n1() + grid.n2()));
    let b = rhs.values();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x: GridFunction::zeros(grid),
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let target = settings.tol * b_norm;

    let inv_diag = match settings.preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => {
            let d = op.diagonal(&grid).ok_or_else(|| {
                Error::NotSpd("Jacobi preconditioner needs the operator diagonal".into())
            })?;
            if let Some(v) = d.iter().find(|v| !(**v > 0.0)) {
                return Err(Error::NotSpd(format!("non-positive diagonal entry {v}")));
            }
            Some(d.iter().map(|v| 1.0 / v).collect::<Vec<_>>())
        }
    };
    let precondition = |r: &[f64]| -> Vec<f64> {
        match &inv_diag {
            Some(inv) => r.iter().zip(inv).map(|(r, d)| r * d).collect(),
            None => r.to_vec(),
        }
    };

    let mut x = match x0 {
        Some(x0) => {
            x0.check_same_grid(rhs)?;
            x0.clone()
        }
        None => GridFunction::zeros(grid),
    };
    let mut r = true_residual(op, rhs, &x, x0.is_some())?;
    let mut r_norm = dot(&r, &r).sqrt();
    if r_norm <= target {
        return Ok(CgSolution {
            x,
            iterations: 0,
            relative_residual: r_norm / b_norm,
        });
    }

    let mut z = precondition(&r);
    let mut p = GridFunction::from_values(grid, z.clone())?;
    let mut rz = dot(&r, &z);

    for iteration in 1..=max_iter {
        let ap = op.apply(&p)?;
        let curvature = dot(p.values(), ap.values());
        if !(curvature > 0.0) {
            return Err(Error::NotSpd(format!(
                "search direction curvature (p, Ap) = {curvature:e} at iteration {iteration}"
            )));
        }
        let alpha = rz / curvature;
        x.axpy(alpha, &p)?;
        for (ri, api) in r.iter_mut().zip(ap.values()) {
            *ri -= alpha * api;
        }
        r_norm = dot(&r, &r).sqrt();

        if r_norm <= target {
            r = true_residual(op, rhs, &x, true)?;
            r_norm = dot(&r, &r).sqrt();
            if r_norm <= target {
                return Ok(CgSolution {
                    x,
                    iterations: iteration,
                    relative_residual: r_norm / b_norm,
                });
            }
            // Recursive residual drifted: restart from the true one.
            z = precondition(&r);
            rz = dot(&r, &z);
            p.values_mut().copy_from_slice(&z);
            continue;
        }

        z = precondition(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.values_mut().iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    let r = true_residual(op, rhs, &x, true)?;
    Err(Error::Convergence {
        iterations: max_iter,
        residual: dot(&r, &r).sqrt() / b_norm,
    })
}

fn true_residual(
    op: &dyn LinearOperator,
    rhs: &GridFunction,
    x: &GridFunction,
    nonzero_x: bool,
) -> Result<Vec<f64>> {
    if !nonzero_x {
        return Ok(rhs.values().to_vec());
    }
    let ax = op.apply(x)?;
    Ok(rhs
        .values()
        .iter()
        .zip(ax.values())
        .map(|(b, a)| b - a)
        .collect())
}
