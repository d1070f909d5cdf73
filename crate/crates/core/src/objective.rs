use alloc::boxed::Box;

use nalgebra::{DMatrix, DVector};

/// A black-box function of `dim()` real variables.
///
/// Analytic derivatives are optional and only ever consulted by diagnostics;
/// the optimizers see nothing but function values.
pub trait Function {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, _x: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// Known lower bound `f_*`, if any.
    fn lower_bound(&self) -> Option<f64> {
        None
    }
}

impl<F: Function + ?Sized> Function for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        (**self).hessian(x)
    }
    fn lower_bound(&self) -> Option<f64> {
        (**self).lower_bound()
    }
}

/// Counting wrapper around a [`Function`].
///
/// Every call to [`Objective::evaluate`] increments the counter by exactly
/// one. Diagnostics that need values without charging the budget go through
/// [`Objective::function`] instead.
pub struct Objective<'f> {
    function: Box<dyn Function + 'f>,
    evaluations: usize,
}

impl<'f> Objective<'f> {
    pub fn new(function: impl Function + 'f) -> Self {
        Self {
            function: Box::new(function),
            evaluations: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.function.dim()
    }

    pub fn evaluate(&mut self, x: &DVector<f64>) -> f64 {
        self.evaluations += 1;
        self.function.value(x)
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Uncounted access for diagnostics only.
    pub fn function(&self) -> &dyn Function {
        &*self.function
    }
}

impl core::fmt::Debug for Objective<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Objective")
            .field("dim", &self.dim())
            .field("evaluations", &self.evaluations)
            .finish()
    }
}
