//! Uniform grids on the unit square, grid functions with homogeneous
//! Dirichlet boundary values, and the linear algebra on them.

mod cg;
mod operator;
mod snapshot;

use serde::{Deserialize, Serialize};

pub use cg::{cg_solve, CgSettings, CgSolution, Preconditioner};
pub use operator::{a_norm, apply_laplacian, LinearOperator, SpdOperator};

use crate::error::{Error, Result};

/// Uniform grid `x_a = i_a h_a`, `i_a = 0..=N_a`, `N_a h_a = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    n1: usize,
    n2: usize,
}

impl Grid2D {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::Validation(format!(
                "grid needs at least 2 cells per direction, got {n1}x{n2}"
            )));
        }
        Ok(Self { n1, n2 })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn h1(&self) -> f64 {
        1.0 / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        1.0 / self.n2 as f64
    }

    /// Interior nodes along x1.
    pub fn m1(&self) -> usize {
        self.n1 - 1
    }

    pub fn m2(&self) -> usize {
        self.n2 - 1
    }

    /// Number of interior nodes `(N1 - 1)(N2 - 1)`.
    pub fn len(&self) -> usize {
        self.m1() * self.m2()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_area(&self) -> f64 {
        self.h1() * self.h2()
    }

    /// Storage offset of interior node `(i1, i2)`, `1 <= i_a <= N_a - 1`; x1 runs fastest.
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        debug_assert!((1..self.n1).contains(&i1) && (1..self.n2).contains(&i2));
        (i2 - 1) * self.m1() + (i1 - 1)
    }

    pub fn coords(&self, i1: usize, i2: usize) -> (f64, f64) {
        (i1 as f64 * self.h1(), i2 as f64 * self.h2())
    }

    /// Interior nodes `(i1, i2)` in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.n2).flat_map(move |i2| (1..self.n1).map(move |i1| (i1, i2)))
    }

    /// Storage offset of the interior node nearest `(0.5, 0.5)`; ties go to the larger index.
    pub fn center_index(&self) -> usize {
        let nearest = |n: usize| ((n as f64 * 0.5).round() as usize).clamp(1, n - 1);
        self.index(nearest(self.n1), nearest(self.n2))
    }

    pub fn check_same(&self, other: &Grid2D) -> Result<()> {
        if self != other {
            return Err(Error::Dimension(format!(
                "grid {}x{} does not match grid {}x{}",
                self.n1, self.n2, other.n1, other.n2
            )));
        }
        Ok(())
    }
}

/// Values at the interior nodes of a grid; boundary values are zero and not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid2D,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values for a grid with {} interior nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.index(i1, i2)]
    }

    pub fn center_value(&self) -> f64 {
        self.values[self.grid.center_index()]
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        self.grid.check_same(&other.grid)
    }

    /// `(w, u) = sum w(x) u(x) h1 h2`, accumulated sequentially in storage order.
    pub fn inner_product(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(dot(&self.values, &other.values) * self.grid.cell_area())
    }

    pub fn l2_norm(&self) -> f64 {
        (dot(&self.values, &self.values) * self.grid.cell_area()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &GridFunction) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> GridFunction {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// `self - other`.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(GridFunction {
            grid: self.grid,
            values,
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn inner_product(w: &GridFunction, u: &GridFunction) -> Result<f64> {
    w.inner_product(u)
}

pub fn l2_norm(w: &GridFunction) -> f64 {
    w.l2_norm()
}

/// Samples `f(x1, x2)` at the interior nodes.
pub fn sample_function(grid: Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> GridFunction {
    let values = grid
        .nodes()
        .map(|(i1, i2)| {
            let (x1, x2) = grid.coords(i1, i2);
            f(x1, x2)
        })
        .collect();
    GridFunction { grid, values }
}
