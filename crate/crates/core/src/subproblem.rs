//! Trust-region subproblem steps with certified decrease.
//!
//! Both steps are exact along their search line, so the fraction-of-Cauchy and
//! fraction-of-optimal decrease bounds hold with constant one. The solvers
//! re-check those bounds before returning and report a violation as an error.
//! The optional [`StepRule::Exact`] rule also tries the global minimizer of
//! the model in the ball and keeps it when it decreases the model more.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{smallest_eigenpair, spectral_norm, symmetric_eigen};
use crate::model::QuadraticModel;

/// Relative slack allowed when re-checking the decrease bounds.
pub const DECREASE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Cauchy,
    Eigen,
    /// Global minimizer of the model in the ball.
    Exact,
    Zero,
}

/// Which candidate steps the solvers consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// Cauchy step (plus the eigenstep for second-order solves).
    #[default]
    Cauchy,
    /// Additionally the exact trust-region minimizer.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub step: DVector<f64>,
    /// `m(center) - m(center + step)`.
    pub predicted_decrease: f64,
    pub kind: StepKind,
}

impl StepResult {
    fn zero(n: usize) -> Self {
        Self {
            step: DVector::zeros(n),
            predicted_decrease: 0.0,
            kind: StepKind::Zero,
        }
    }
}

/// Minimizer of the model along `-g` inside the ball of radius `delta`.
pub fn cauchy_step(model: &QuadraticModel, delta: f64) -> StepResult {
    let g = model.gradient();
    let gnorm = g.norm();
    if gnorm == 0.0 || delta <= 0.0 {
        return StepResult::zero(model.dim());
    }
    let dir = -g / gnorm;
    // m(t) = c - t‖g‖ + ½ t² curv along the unit direction.
    let curv = dir.dot(&(model.hessian() * &dir));
    let t = if curv > 0.0 {
        (gnorm / curv).min(delta)
    } else {
        delta
    };
    let step = dir * t;
    let predicted_decrease = model.decrease(&step);
    StepResult {
        step,
        predicted_decrease,
        kind: StepKind::Cauchy,
    }
}

/// Boundary step along an eigenvector of the most negative model curvature,
/// signed so that `gᵀs ≤ 0`. Returns a zero step when the Hessian is
/// positive semidefinite.
pub fn eigenstep(model: &QuadraticModel, delta: f64) -> Result<StepResult> {
    let (lambda, v) = smallest_eigenpair(model.hessian())?;
    if lambda >= 0.0 || delta <= 0.0 {
        return Ok(StepResult::zero(model.dim()));
    }
    let sign = if model.gradient().dot(&v) > 0.0 { -1.0 } else { 1.0 };
    let step = v * (sign * delta);
    let predicted_decrease = model.decrease(&step);
    Ok(StepResult {
        step,
        predicted_decrease,
        kind: StepKind::Eigen,
    })
}

/// Bisection steps on the secular equation.
const SECULAR_ITERATIONS: usize = 200;

/// Global minimizer of the model in the ball of radius `delta`, from the
/// eigendecomposition `H = Q Λ Qᵀ`.
///
/// The step is `s(λ) = -Q (Λ + λI)⁺ Qᵀ g` with the smallest admissible
/// `λ ≥ max(0, -λ_min)` giving `‖s‖ ≤ δ`; in the hard case the remainder of
/// the radius is spent along the eigenvector of `λ_min`.
pub fn exact_step(model: &QuadraticModel, delta: f64) -> Result<StepResult> {
    let n = model.dim();
    if delta <= 0.0 {
        return Ok(StepResult::zero(n));
    }
    let eig = symmetric_eigen(model.hessian())?;
    let ghat = eig.eigenvectors.transpose() * model.gradient();
    let values = &eig.eigenvalues;
    let (imin, lmin) = values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let scale = values.amax().max(model.gradient().norm() / delta).max(f64::MIN_POSITIVE);
    let tiny = 1e-12 * scale;

    let coefficients = |lambda: f64| {
        DVector::from_fn(n, |i, _| {
            let d = values[i] + lambda;
            if d > tiny {
                -ghat[i] / d
            } else {
                0.0
            }
        })
    };
    let lower = (-lmin).max(0.0);
    let mut coeffs = coefficients(lower);
    // Gradient weight on the directions that stay singular at `lower`.
    let singular_weight = (0..n)
        .filter(|&i| values[i] + lower <= tiny)
        .map(|i| ghat[i].abs())
        .fold(0.0, f64::max);
    if coeffs.norm() > delta || singular_weight > tiny {
        let mut lo = lower;
        let mut hi = lower + model.gradient().norm() / delta + values.amax() + tiny;
        for _ in 0..SECULAR_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if coefficients(mid).norm() > delta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        coeffs = coefficients(hi);
    } else if lmin < 0.0 {
        let rest = libm::sqrt((delta * delta - coeffs.norm_squared()).max(0.0));
        coeffs[imin] += rest;
    }
    let step = &eig.eigenvectors * coeffs;
    let predicted_decrease = model.decrease(&step);
    Ok(StepResult {
        step,
        predicted_decrease,
        kind: StepKind::Exact,
    })
}

fn better(current: StepResult, candidate: StepResult) -> StepResult {
    if candidate.predicted_decrease > current.predicted_decrease {
        candidate
    } else {
        current
    }
}

/// Right-hand side of the fraction-of-Cauchy-decrease condition with unit
/// constant: `½ ‖g‖ min{‖g‖/‖H‖, δ}`, where `‖H‖ = 0` selects `δ`.
pub fn cauchy_decrease_bound(gnorm: f64, hnorm: f64, delta: f64) -> f64 {
    let reach = if hnorm > 0.0 {
        (gnorm / hnorm).min(delta)
    } else {
        delta
    };
    0.5 * gnorm * reach
}

/// Right-hand side of the fraction-of-optimal-decrease condition with unit
/// constant.
pub fn optimal_decrease_bound(gnorm: f64, hnorm: f64, lambda_min: f64, delta: f64) -> f64 {
    let curvature = 0.5 * (-lambda_min).max(0.0) * delta * delta;
    cauchy_decrease_bound(gnorm, hnorm, delta).max(curvature)
}

fn certify(decrease: f64, bound: f64) -> Result<()> {
    if decrease + DECREASE_SLACK * bound.abs() >= bound {
        Ok(())
    } else {
        Err(Error::InsufficientDecrease { decrease, bound })
    }
}

/// Cauchy step, checked against the fraction-of-Cauchy-decrease bound.
pub fn solve_first_order(model: &QuadraticModel, delta: f64) -> Result<StepResult> {
    solve_first_order_with(model, delta, StepRule::Cauchy)
}

/// As [`solve_first_order`]; under [`StepRule::Exact`] the exact step
/// replaces the Cauchy step when it decreases the model more.
pub fn solve_first_order_with(model: &QuadraticModel, delta: f64, rule: StepRule) -> Result<StepResult> {
    let mut step = cauchy_step(model, delta);
    if rule == StepRule::Exact {
        step = better(step, exact_step(model, delta)?);
    }
    let hnorm = spectral_norm(model.hessian())?;
    certify(
        step.predicted_decrease,
        cauchy_decrease_bound(model.gradient().norm(), hnorm, delta),
    )?;
    Ok(step)
}

/// The better of the Cauchy step and the eigenstep (ties go to Cauchy),
/// checked against the fraction-of-optimal-decrease bound.
pub fn solve_second_order(model: &QuadraticModel, delta: f64) -> Result<StepResult> {
    solve_second_order_with(model, delta, StepRule::Cauchy)
}

/// As [`solve_second_order`], optionally also trying the exact step.
pub fn solve_second_order_with(model: &QuadraticModel, delta: f64, rule: StepRule) -> Result<StepResult> {
    let (lambda_min, _) = smallest_eigenpair(model.hessian())?;
    let hnorm = spectral_norm(model.hessian())?;
    let mut best = better(cauchy_step(model, delta), eigenstep(model, delta)?);
    if rule == StepRule::Exact {
        best = better(best, exact_step(model, delta)?);
    }
    certify(
        best.predicted_decrease,
        optimal_decrease_bound(model.gradient().norm(), hnorm, lambda_min, delta),
    )?;
    Ok(best)
}
