//! Test functions with analytic derivatives.

use nalgebra::{DMatrix, DVector};

use crate::objective::Function;

/// `a (x₂ - x₁²)² + (1 - x₁)²`, optionally embedded in a higher dimension
/// where the remaining coordinates do not affect the value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rosenbrock {
    pub curvature: f64,
    pub dim: usize,
}

impl Rosenbrock {
    /// The classical function with curvature 100 in two dimensions.
    pub fn classic() -> Self {
        Self {
            curvature: 100.0,
            dim: 2,
        }
    }

    /// Curvature 10, embedded in `dim ≥ 2` dimensions.
    pub fn mild(dim: usize) -> Self {
        assert!(dim >= 2, "rosenbrock needs at least two variables");
        Self {
            curvature: 10.0,
            dim,
        }
    }
}

impl Function for Rosenbrock {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let r = x[1] - x[0] * x[0];
        let t = 1.0 - x[0];
        self.curvature * r * r + t * t
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let a = self.curvature;
        let r = x[1] - x[0] * x[0];
        let mut g = DVector::zeros(self.dim);
        g[0] = -4.0 * a * x[0] * r - 2.0 * (1.0 - x[0]);
        g[1] = 2.0 * a * r;
        Some(g)
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let a = self.curvature;
        let mut h = DMatrix::zeros(self.dim, self.dim);
        h[(0, 0)] = 12.0 * a * x[0] * x[0] - 4.0 * a * x[1] + 2.0;
        h[(0, 1)] = -4.0 * a * x[0];
        h[(1, 0)] = h[(0, 1)];
        h[(1, 1)] = 2.0 * a;
        Some(h)
    }

    fn lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `‖x‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub dim: usize,
}

impl Function for Sphere {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(x * 2.0)
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim, self.dim) * 2.0)
    }

    fn lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `x y²`: saddle-type critical points along the line `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct XySquared;

impl Function for XySquared {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        x[0] * x[1] * x[1]
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(DVector::from_vec(alloc::vec![
            x[1] * x[1],
            2.0 * x[0] * x[1]
        ]))
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 2.0 * x[1], 2.0 * x[1], 2.0 * x[0]],
        ))
    }
}

/// `c + bᵀx + ½ xᵀAx` with symmetric `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub c: f64,
    pub b: DVector<f64>,
    pub a: DMatrix<f64>,
}

impl Function for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.c + self.b.dot(x) + 0.5 * x.dot(&(&self.a * x))
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(&self.b + &self.a * x)
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.a.clone())
    }
}
