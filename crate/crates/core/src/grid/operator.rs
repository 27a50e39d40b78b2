use super::{Grid2D, GridFunction};
use crate::error::{Error, Result};

/// A linear map on grid functions.
pub trait LinearOperator {
    fn apply(&self, w: &GridFunction) -> Result<GridFunction>;

    /// Diagonal entries, when cheaply available (used by the Jacobi preconditioner).
    fn diagonal(&self, _grid: &Grid2D) -> Option<Vec<f64>> {
        None
    }
}

/// Symmetric positive (semi)definite operators on `L2(omega)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpdOperator {
    /// Five-point `-Laplace` with zero Dirichlet data.
    FivePointLaplacian(Grid2D),
    Identity,
    /// The zero map (default reaction term).
    Zero,
    /// Pointwise multiplication by a nonnegative coefficient field.
    DiagonalScaling(Vec<f64>),
    /// `sum_k w_k L_k` with `w_k >= 0`.
    ScaledSum(Vec<(f64, SpdOperator)>),
}

impl SpdOperator {
    pub fn laplacian(grid: Grid2D) -> Self {
        Self::FivePointLaplacian(grid)
    }

    pub fn diagonal_scaling(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(c) = coefficients.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::Validation(format!(
                "diagonal scaling coefficient {c} must be finite and >= 0"
            )));
        }
        Ok(Self::DiagonalScaling(coefficients))
    }

    /// Multiplication by a constant `c >= 0` on every interior node of `grid`.
    pub fn constant_scaling(grid: Grid2D, c: f64) -> Result<Self> {
        Self::diagonal_scaling(vec![c; grid.len()])
    }

    pub fn scaled_sum(parts: Vec<(f64, SpdOperator)>) -> Result<Self> {
        if let Some((w, _)) = parts.iter().find(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation(format!(
                "scaled-sum weight {w} must be finite and >= 0"
            )));
        }
        Ok(Self::ScaledSum(parts))
    }

    /// Structural check of `L >= delta I`, `delta > 0`.
    pub fn is_positive_definite(&self) -> bool {
        match self {
            Self::FivePointLaplacian(_) | Self::Identity => true,
            Self::Zero => false,
            Self::DiagonalScaling(c) => c.iter().all(|&c| c > 0.0),
            Self::ScaledSum(parts) => {
                self.is_positive_semidefinite()
                    && parts
                        .iter()
                        .any(|(w, op)| *w > 0.0 && op.is_positive_definite())
            }
        }
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        match self {
            Self::FivePointLaplacian(_) | Self::Identity | Self::Zero => true,
            Self::DiagonalScaling(c) => c.iter().all(|&c| c >= 0.0),
            Self::ScaledSum(parts) => parts
                .iter()
                .all(|(w, op)| *w >= 0.0 && op.is_positive_semidefinite()),
        }
    }

    /// Checks that the operator can act on functions of `grid`.
    pub fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        match self {
            Self::FivePointLaplacian(g) => g.check_same(grid),
            Self::Identity | Self::Zero => Ok(()),
            Self::DiagonalScaling(c) if c.len() != grid.len() => Err(Error::Dimension(format!(
                "diagonal scaling has {} coefficients, grid has {} nodes",
                c.len(),
                grid.len()
            ))),
            Self::DiagonalScaling(_) => Ok(()),
            Self::ScaledSum(parts) => parts.iter().try_for_each(|(_, op)| op.check_grid(grid)),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }
}

impl LinearOperator for SpdOperator {
    fn apply(&self, w: &GridFunction) -> Result<GridFunction> {
        match self {
            Self::FivePointLaplacian(g) => apply_laplacian(g, w),
            Self::Identity => Ok(w.clone()),
            Self::Zero => Ok(GridFunction::zeros(*w.grid())),
            Self::DiagonalScaling(c) => {
                self.check_grid(w.grid())?;
                let values = c.iter().zip(w.values()).map(|(c, v)| c * v).collect();
                GridFunction::from_values(*w.grid(), values)
            }
            Self::ScaledSum(parts) => {
                let mut out = GridFunction::zeros(*w.grid());
                for (weight, op) in parts {
                    out.axpy(*weight, &op.apply(w)?)?;
                }
                Ok(out)
            }
        }
    }

    fn diagonal(&self, grid: &Grid2D) -> Option<Vec<f64>> {
        match self {
            Self::FivePointLaplacian(g) => {
                let d = 2.0 / (g.h1() * g.h1()) + 2.0 / (g.h2() * g.h2());
                Some(vec![d; g.len()])
            }
            Self::Identity => Some(vec![1.0; grid.len()]),
            Self::Zero => Some(vec![0.0; grid.len()]),
            Self::DiagonalScaling(c) => Some(c.clone()),
            Self::ScaledSum(parts) => {
                let mut d = vec![0.0; grid.len()];
                for (weight, op) in parts {
                    for (acc, v) in d.iter_mut().zip(op.diagonal(grid)?) {
                        *acc += weight * v;
                    }
                }
                Some(d)
            }
        }
    }
}

/// `(Aw)(x) = -(w(x+h1) - 2w(x) + w(x-h1))/h1^2 - (w(x+h2) - 2w(x) + w(x-h2))/h2^2`,
/// reading zeros outside the interior.
pub fn apply_laplacian(grid: &Grid2D, w: &GridFunction) -> Result<GridFunction> {
    grid.check_same(w.grid())?;
    let (m1, m2) = (grid.m1(), grid.m2());
    let c1 = 1.0 / (grid.h1() * grid.h1());
    let c2 = 1.0 / (grid.h2() * grid.h2());
    let v = w.values();
    let mut out = vec![0.0; v.len()];
    for j in 0..m2 {
        for i in 0..m1 {
            let k = j * m1 + i;
            let center = v[k];
            let west = if i > 0 { v[k - 1] } else { 0.0 };
            let east = if i + 1 < m1 { v[k + 1] } else { 0.0 };
            let south = if j > 0 { v[k - m1] } else { 0.0 };
            let north = if j + 1 < m2 { v[k + m1] } else { 0.0 };
            out[k] = -(east - 2.0 * center + west) * c1 - (north - 2.0 * center + south) * c2;
        }
    }
    GridFunction::from_values(*grid, out)
}

/// `||w||_D = (Dw, w)^(1/2)`.
///
/// Quadratic forms down to `-1e-12 ||w||^2` are treated as rounding and clamped to zero.
pub fn a_norm(op: &dyn LinearOperator, w: &GridFunction) -> Result<f64> {
    let q = op.apply(w)?.inner_product(w)?;
    let scale = w.inner_product(w)?;
    if q < -1e-12 * scale {
        return Err(Error::NotSpd(format!(
            "quadratic form (Dw, w) = {q:e} is negative"
        )));
    }
    Ok(q.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample_function;
    use std::f64::consts::PI;

    #[test]
    fn zero_maps_to_zero() {
        let g = Grid2D::square(6).unwrap();
        let aw = apply_laplacian(&g, &GridFunction::zeros(g)).unwrap();
        assert!(aw.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn center_spike_stencil() {
        let g = Grid2D::square(4).unwrap();
        let mut w = GridFunction::zeros(g);
        w.values_mut()[g.index(2, 2)] = 1.0;
        let aw = apply_laplacian(&g, &w).unwrap();
        // h = 1/4: 2/h1^2 + 2/h2^2 = 64 at the spike, -1/h^2 = -16 at the four neighbours.
        assert_eq!(aw.at(2, 2), 64.0);
        for (i1, i2) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert_eq!(aw.at(i1, i2), -16.0);
        }
        for (i1, i2) in [(1, 1), (3, 3), (1, 3), (3, 1)] {
            assert_eq!(aw.at(i1, i2), 0.0);
        }
    }

    #[test]
    fn anisotropic_spike() {
        let g = Grid2D::new(4, 8).unwrap();
        let mut w = GridFunction::zeros(g);
        w.values_mut()[g.index(2, 4)] = 1.0;
        let aw = apply_laplacian(&g, &w).unwrap();
        assert_eq!(aw.at(2, 4), 2.0 * 16.0 + 2.0 * 64.0);
        assert_eq!(aw.at(1, 4), -16.0);
        assert_eq!(aw.at(2, 5), -64.0);
    }

    #[test]
    fn grid_mismatch() {
        let g = Grid2D::square(4).unwrap();
        let w = GridFunction::zeros(Grid2D::square(5).unwrap());
        assert!(matches!(apply_laplacian(&g, &w), Err(Error::Dimension(_))));
        let d = SpdOperator::diagonal_scaling(vec![1.0; 3]).unwrap();
        assert!(d.apply(&GridFunction::zeros(g)).is_err());
    }

    #[test]
    fn a_norm_cases() {
        let g = Grid2D::square(8).unwrap();
        let w = sample_function(g, |x, y| x * (1.0 - y));
        let id = a_norm(&SpdOperator::Identity, &w).unwrap();
        assert!((id - w.l2_norm()).abs() < 1e-15);
        assert_eq!(a_norm(&SpdOperator::laplacian(g), &GridFunction::zeros(g)).unwrap(), 0.0);

        let h = g.h1();
        let lambda = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        let e = sample_function(g, |x, y| (PI * x).sin() * (PI * y).sin());
        let an = a_norm(&SpdOperator::laplacian(g), &e).unwrap();
        assert!((an - lambda.sqrt() * e.l2_norm()).abs() < 1e-12 * an);
    }

    #[test]
    fn a_norm_rejects_negative_forms() {
        struct Negative;
        impl LinearOperator for Negative {
            fn apply(&self, w: &GridFunction) -> Result<GridFunction> {
                Ok(w.scaled(-1.0))
            }
        }
        let g = Grid2D::square(4).unwrap();
        let w = GridFunction::constant(g, 1.0);
        assert!(matches!(a_norm(&Negative, &w), Err(Error::NotSpd(_))));
    }

    #[test]
    fn structural_definiteness() {
        let g = Grid2D::square(4).unwrap();
        assert!(SpdOperator::laplacian(g).is_positive_definite());
        assert!(!SpdOperator::Zero.is_positive_definite());
        assert!(SpdOperator::Zero.is_positive_semidefinite());
        let semi = SpdOperator::diagonal_scaling(vec![0.0, 1.0]).unwrap();
        assert!(semi.is_positive_semidefinite() && !semi.is_positive_definite());
        assert!(SpdOperator::diagonal_scaling(vec![-1.0]).is_err());
        let sum = SpdOperator::scaled_sum(vec![(0.5, SpdOperator::Identity), (2.0, semi)]).unwrap();
        assert!(sum.is_positive_definite());
        assert!(SpdOperator::scaled_sum(vec![(-1.0, SpdOperator::Identity)]).is_err());
    }

    #[test]
    fn diagonal_matches_apply_on_unit_vectors() {
        let g = Grid2D::new(4, 5).unwrap();
        let op = SpdOperator::scaled_sum(vec![
            (0.3, SpdOperator::laplacian(g)),
            (1.0, SpdOperator::Identity),
            (2.0, SpdOperator::constant_scaling(g, 0.5).unwrap()),
        ])
        .unwrap();
        let diag = op.diagonal(&g).unwrap();
        for k in 0..g.len() {
            let mut e = GridFunction::zeros(g);
            e.values_mut()[k] = 1.0;
            let col = op.apply(&e).unwrap();
            assert!((col.values()[k] - diag[k]).abs() < 1e-12 * diag[k]);
        }
    }
}
