use nalgebra::{DMatrix, DVector};

/// Model decrease at or below this value makes ρ undefined.
pub const RHO_DENOMINATOR_EPS: f64 = 1e-30;

/// Quadratic model `m(center + s) = c + gᵀs + ½ sᵀHs`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    center: DVector<f64>,
    c: f64,
    g: DVector<f64>,
    h: DMatrix<f64>,
}

impl QuadraticModel {
    /// Builds a model, storing the symmetric part of `h`.
    ///
    /// Panics if the shapes of `g` and `h` do not match `center`.
    pub fn new(center: DVector<f64>, c: f64, g: DVector<f64>, h: DMatrix<f64>) -> Self {
        let n = center.len();
        assert_eq!(g.len(), n, "gradient length");
        assert_eq!(h.shape(), (n, n), "hessian shape");
        let h = (&h + h.transpose()) * 0.5;
        Self { center, c, g, h }
    }

    /// The linear model `c + gᵀs`.
    pub fn linear(center: DVector<f64>, c: f64, g: DVector<f64>) -> Self {
        let n = center.len();
        Self::new(center, c, g, DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn gradient(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_hessian(mut self, h: DMatrix<f64>) -> Self {
        assert_eq!(h.shape(), self.h.shape(), "hessian shape");
        self.h = (&h + h.transpose()) * 0.5;
        self
    }

    /// Model value at `center + s`.
    pub fn value_at_offset(&self, s: &DVector<f64>) -> f64 {
        self.c + self.g.dot(s) + 0.5 * s.dot(&(&self.h * s))
    }

    /// Model value at the absolute point `y`.
    pub fn value(&self, y: &DVector<f64>) -> f64 {
        self.value_at_offset(&(y - &self.center))
    }

    /// Model gradient `g + Hs` at `center + s`.
    pub fn gradient_at_offset(&self, s: &DVector<f64>) -> DVector<f64> {
        &self.g + &self.h * s
    }

    /// `m(center) - m(center + s)`, computed without the constant term.
    pub fn decrease(&self, s: &DVector<f64>) -> f64 {
        -(self.g.dot(s) + 0.5 * s.dot(&(&self.h * s)))
    }
}

/// Acceptance ratio `(f_old - f_new) / (m_old - m_new)`.
///
/// Returns `None` ("undefined") when the model decrease is not above
/// [`RHO_DENOMINATOR_EPS`]; drivers treat that as an unsuccessful iteration.
pub fn compute_rho(f_old: f64, f_new: f64, m_old: f64, m_new: f64) -> Option<f64> {
    let predicted = m_old - m_new;
    if predicted > RHO_DENOMINATOR_EPS {
        Some((f_old - f_new) / predicted)
    } else {
        None
    }
}
