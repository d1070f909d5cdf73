use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::model::QuadraticModel;
use crate::objective::Function;

/// Interior low-discrepancy probes used by the quality checks.
pub const DEFAULT_PROBES: usize = 64;

/// Error constants `κ_ef`, `κ_eg`, `κ_eh` of the fully linear / fully
/// quadratic definitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityConstants {
    pub kappa_ef: f64,
    pub kappa_eg: f64,
    pub kappa_eh: f64,
}

impl QualityConstants {
    pub fn new(kappa_ef: f64, kappa_eg: f64, kappa_eh: f64) -> Result<Self> {
        let checks: [(&'static str, f64); 3] =
            [("kappa_ef", kappa_ef), ("kappa_eg", kappa_eg), ("kappa_eh", kappa_eh)];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(Self {
            kappa_ef,
            kappa_eg,
            kappa_eh,
        })
    }
}

/// Replaces the Hessian by zero when its spectral norm exceeds `kappa_bhm`.
pub fn cap_hessian(model: QuadraticModel, kappa_bhm: f64) -> Result<QuadraticModel> {
    if spectral_norm(model.hessian())? <= kappa_bhm {
        Ok(model)
    } else {
        let n = model.dim();
        Ok(model.with_hessian(DMatrix::zeros(n, n)))
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut k = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= k).all(|&p| !k.is_multiple_of(p)) {
            primes.push(k);
        }
        k += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Probe offsets in the closed ball of radius `delta`: the center, the `2n`
/// axis points on the boundary, and `interior` Halton points mapped radially
/// from the cube onto the ball.
pub fn probe_offsets(n: usize, delta: f64, interior: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(1 + 2 * n + interior);
    out.push(DVector::zeros(n));
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = DVector::zeros(n);
            e[i] = sign * delta;
            out.push(e);
        }
    }
    let primes = first_primes(n);
    for k in 1..=interior as u64 {
        let cube = DVector::from_fn(n, |i, _| 2.0 * radical_inverse(k, primes[i]) - 1.0);
        let euclid = cube.norm();
        if euclid == 0.0 {
            out.push(cube);
        } else {
            out.push(&cube * (delta * cube.amax() / euclid));
        }
    }
    out
}

/// Fully linear check at the given offsets from `x`.
pub fn check_fully_linear_at(
    model: &QuadraticModel,
    function: &dyn Function,
    x: &DVector<f64>,
    delta: f64,
    kappa: &QualityConstants,
    offsets: &[DVector<f64>],
) -> Result<bool> {
    for s in offsets {
        let y = x + s;
        let grad = function.gradient(&y).ok_or(Error::MissingDerivative("gradient"))?;
        let model_grad = model.gradient_at_offset(&(&y - model.center()));
        if (grad - model_grad).norm() > kappa.kappa_eg * delta {
            return Ok(false);
        }
        if (function.value(&y) - model.value(&y)).abs() > kappa.kappa_ef * delta * delta {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks the fully linear error bounds at the standard probe set.
pub fn check_fully_linear(
    model: &QuadraticModel,
    function: &dyn Function,
    x: &DVector<f64>,
    delta: f64,
    kappa: &QualityConstants,
    probes: usize,
) -> Result<bool> {
    let offsets = probe_offsets(x.len(), delta, probes);
    check_fully_linear_at(model, function, x, delta, kappa, &offsets)
}

/// Fully quadratic check at the given offsets from `x`.
pub fn check_fully_quadratic_at(
    model: &QuadraticModel,
    function: &dyn Function,
    x: &DVector<f64>,
    delta: f64,
    kappa: &QualityConstants,
    offsets: &[DVector<f64>],
) -> Result<bool> {
    for s in offsets {
        let y = x + s;
        let hess = function.hessian(&y).ok_or(Error::MissingDerivative("hessian"))?;
        if spectral_norm(&(hess - model.hessian()))? > kappa.kappa_eh * delta {
            return Ok(false);
        }
        let grad = function.gradient(&y).ok_or(Error::MissingDerivative("gradient"))?;
        let model_grad = model.gradient_at_offset(&(&y - model.center()));
        if (grad - model_grad).norm() > kappa.kappa_eg * delta * delta {
            return Ok(false);
        }
        if (function.value(&y) - model.value(&y)).abs() > kappa.kappa_ef * delta * delta * delta {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks the fully quadratic error bounds at the standard probe set.
pub fn check_fully_quadratic(
    model: &QuadraticModel,
    function: &dyn Function,
    x: &DVector<f64>,
    delta: f64,
    kappa: &QualityConstants,
    probes: usize,
) -> Result<bool> {
    let offsets = probe_offsets(x.len(), delta, probes);
    check_fully_quadratic_at(model, function, x, delta, kappa, &offsets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::Quadratic;
    use alloc::vec;

    struct Power(i32);

    impl Function for Power {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            libm::pow(x[0], self.0 as f64)
        }
        fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
            Some(DVector::from_element(1, self.0 as f64 * libm::pow(x[0], (self.0 - 1) as f64)))
        }
        fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
            let k = self.0 as f64;
            Some(DMatrix::from_element(1, 1, k * (k - 1.0) * libm::pow(x[0], (self.0 - 2) as f64)))
        }
    }

    struct ValueOnly;
    impl Function for ValueOnly {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            x[0]
        }
    }

    fn line(c: f64, g: f64, h: f64) -> QuadraticModel {
        QuadraticModel::new(
            DVector::zeros(1),
            c,
            DVector::from_element(1, g),
            DMatrix::from_element(1, 1, h),
        )
    }

    #[test]
    fn cap_hessian_examples() {
        let m = QuadraticModel::new(
            DVector::zeros(2),
            0.0,
            DVector::zeros(2),
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0])),
        );
        assert_eq!(cap_hessian(m.clone(), 10.0).unwrap(), m);
        assert_eq!(cap_hessian(m.clone(), 2.0).unwrap(), m);
        let big = m.with_hessian(DMatrix::from_element(1, 1, 1e7).resize(2, 2, 0.0));
        let capped = cap_hessian(big.clone(), 1e6).unwrap();
        assert_eq!(capped.hessian(), &DMatrix::zeros(2, 2));
        assert_eq!(capped.gradient(), big.gradient());
        assert_eq!(capped.constant(), big.constant());
    }

    #[test]
    fn probes_lie_in_the_ball() {
        for n in 1..6 {
            let p = probe_offsets(n, 0.3, DEFAULT_PROBES);
            assert_eq!(p.len(), 1 + 2 * n + DEFAULT_PROBES);
            assert!(p.iter().all(|s| s.norm() <= 0.3 * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn exact_taylor_model_is_fully_linear_and_quadratic() {
        let f = Quadratic {
            c: 1.0,
            b: DVector::from_vec(vec![1.0, -2.0]),
            a: DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]),
        };
        let x = DVector::from_vec(vec![0.4, -0.1]);
        let m = QuadraticModel::new(x.clone(), f.value(&x), f.gradient(&x).unwrap(), f.a.clone());
        let tiny = QualityConstants::new(1e-9, 1e-9, 1e-9).unwrap();
        assert!(check_fully_linear(&m, &f, &x, 0.5, &tiny, DEFAULT_PROBES).unwrap());
        assert!(check_fully_quadratic(&m, &f, &x, 0.5, &tiny, DEFAULT_PROBES).unwrap());

        let kappa = QualityConstants::new(1.0, 1.0, 1.0).unwrap();
        let delta = 0.5;
        let shifted = m.clone().with_constant(m.constant() + 2.0 * kappa.kappa_ef * delta * delta);
        assert!(!check_fully_linear(&shifted, &f, &x, delta, &kappa, DEFAULT_PROBES).unwrap());

        let perturbed = m.clone().with_hessian(m.hessian() + DMatrix::identity(2, 2) * (2.0 * kappa.kappa_eh * delta));
        assert!(!check_fully_quadratic(&perturbed, &f, &x, delta, &kappa, DEFAULT_PROBES).unwrap());
    }

    #[test]
    fn linear_interpolant_of_square() {
        // Line through (0, 0) and (δ, δ²): m(s) = δ s. On [-δ, δ] the gradient
        // error |2s - δ| peaks at 3δ and the value error |s² - δs| at 2δ².
        for delta in [1.0, 0.5, 0.25] {
            let m = line(0.0, delta, 0.0);
            let x = DVector::zeros(1);
            let ok = QualityConstants::new(2.0 + 1e-9, 3.0 + 1e-9, 1.0).unwrap();
            assert!(check_fully_linear(&m, &Power(2), &x, delta, &ok, DEFAULT_PROBES).unwrap());
            let tight_g = QualityConstants::new(2.0 + 1e-9, 2.9, 1.0).unwrap();
            assert!(!check_fully_linear(&m, &Power(2), &x, delta, &tight_g, DEFAULT_PROBES).unwrap());
            let tight_f = QualityConstants::new(1.9, 3.0 + 1e-9, 1.0).unwrap();
            assert!(!check_fully_linear(&m, &Power(2), &x, delta, &tight_f, DEFAULT_PROBES).unwrap());
        }
    }

    #[test]
    fn quadratic_interpolant_of_cube() {
        // Interpolant of s³ on {-δ, 0, δ} is δ² s. Errors: Hessian |6s| ≤ 6δ,
        // gradient |3s² - δ²| ≤ 2δ², value |s³ - δ²s| ≤ 2δ³/(3√3).
        let value_bound = 2.0 / (3.0 * libm::sqrt(3.0));
        for delta in [1.0, 0.5, 0.25] {
            let m = line(0.0, delta * delta, 0.0);
            let x = DVector::zeros(1);
            let ok = QualityConstants::new(value_bound + 1e-9, 2.0 + 1e-9, 6.0 + 1e-9).unwrap();
            assert!(check_fully_quadratic(&m, &Power(3), &x, delta, &ok, DEFAULT_PROBES).unwrap());
            let tight_h = QualityConstants::new(value_bound + 1e-9, 2.0 + 1e-9, 5.9).unwrap();
            assert!(!check_fully_quadratic(&m, &Power(3), &x, delta, &tight_h, DEFAULT_PROBES).unwrap());
            let tight_g = QualityConstants::new(value_bound + 1e-9, 1.9, 6.0 + 1e-9).unwrap();
            assert!(!check_fully_quadratic(&m, &Power(3), &x, delta, &tight_g, DEFAULT_PROBES).unwrap());
        }
    }

    #[test]
    fn missing_gradient_is_an_error() {
        let k = QualityConstants::new(1.0, 1.0, 1.0).unwrap();
        let m = line(0.0, 1.0, 0.0);
        assert_eq!(
            check_fully_linear(&m, &ValueOnly, &DVector::zeros(1), 1.0, &k, 4),
            Err(Error::MissingDerivative("gradient"))
        );
    }

    #[test]
    fn constants_must_be_positive() {
        assert!(QualityConstants::new(0.0, 1.0, 1.0).is_err());
        assert!(QualityConstants::new(1.0, f64::NAN, 1.0).is_err());
    }
}
