//! Monte-Carlo estimates of model quality.

use nalgebra::DVector;
use probdfo_core::linalg::condition_number;
use probdfo_core::models::{
    check_fully_linear, check_fully_quadratic, interpolation_matrix, MonomialBasis, QualityConstants,
    DEFAULT_PROBES,
};
use probdfo_core::sampling::gaussian_set;
use probdfo_core::trust_region::{BuildContext, BuildModel};
use probdfo_core::{Archive, Error as CoreError, Function, Objective, Rng};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualityOrder {
    FullyLinear,
    FullyQuadratic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    /// Binomial standard error `√(r(1-r)/trials)`.
    pub stderr: f64,
    pub trials: usize,
}

fn binomial(successes: usize, trials: usize) -> (f64, f64) {
    let rate = successes as f64 / trials as f64;
    (rate, (rate * (1.0 - rate) / trials as f64).sqrt())
}

/// Builds `trials` independent models at `(x, δ)` and reports the fraction
/// that pass the fully linear (or fully quadratic) check with constants
/// `kappa`. A builder failure counts as a miss. Every trial starts from an
/// archive holding only `x`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_model_quality_rate(
    builder: &mut dyn BuildModel,
    function: &dyn Function,
    x: &DVector<f64>,
    delta: f64,
    kappa: &QualityConstants,
    order: QualityOrder,
    trials: usize,
    rng: &mut Rng,
) -> Result<RateEstimate> {
    if trials < 100 {
        return Err(HarnessError::Config("model-rate needs at least 100 trials".into()));
    }
    if function.gradient(x).is_none() {
        return Err(CoreError::MissingDerivative("gradient").into());
    }
    if order == QualityOrder::FullyQuadratic && function.hessian(x).is_none() {
        return Err(CoreError::MissingDerivative("hessian").into());
    }
    let f_center = function.value(x);
    let mut objective = Objective::new(function);
    let mut hits = 0;
    for _ in 0..trials {
        let mut archive = Archive::new();
        archive.push(x.clone(), f_center);
        let ctx = BuildContext {
            center: x,
            f_center,
            delta,
            archive: &mut archive,
        };
        let model = match builder.build(ctx, &mut objective, rng) {
            Ok(model) => model,
            Err(e) => {
                log::debug!("model-rate trial failed to build: {e}");
                continue;
            }
        };
        let good = match order {
            QualityOrder::FullyLinear => check_fully_linear(&model, function, x, delta, kappa, DEFAULT_PROBES)?,
            QualityOrder::FullyQuadratic => {
                check_fully_quadratic(&model, function, x, delta, kappa, DEFAULT_PROBES)?
            }
        };
        hits += usize::from(good);
    }
    let (rate, stderr) = binomial(hits, trials);
    Ok(RateEstimate { rate, stderr, trials })
}

/// `6.5 n / (√(2π) Λ)`, the tail bound for square Gaussian systems.
pub fn tail_bound(n: usize, lambda: f64) -> f64 {
    6.5 * n as f64 / ((2.0 * std::f64::consts::PI).sqrt() * lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub lambda: f64,
    /// Empirical `P(cond(M) > Λ)`.
    pub probability: f64,
    pub stderr: f64,
    /// Only known for `n = p`.
    pub bound: Option<f64>,
    /// The estimate exceeds the bound by more than three standard errors.
    pub flagged: bool,
}

/// Estimates `P(cond(M(Φ, Y)) > Λ)` for linear `Φ` and `Y = {0, y¹, …, yᵖ}`
/// with standard Gaussian `yⁱ ∈ ℝⁿ`, one shared sample of `trials` sets for
/// all `Λ`.
pub fn condition_number_tail(
    n: usize,
    p: usize,
    lambdas: &[f64],
    trials: usize,
    rng: &mut Rng,
) -> Result<Vec<TailEstimate>> {
    if trials < 1000 {
        return Err(HarnessError::Config("cond-tail needs at least 1000 trials".into()));
    }
    if n == 0 || p == 0 {
        return Err(HarnessError::Config("cond-tail needs n, p >= 1".into()));
    }
    let basis = MonomialBasis::linear(n);
    let origin = DVector::zeros(n);
    let mut conditions = Vec::with_capacity(trials);
    for _ in 0..trials {
        let set = gaussian_set(&origin, 1.0, p, rng)?;
        conditions.push(condition_number(&interpolation_matrix(&basis, &set, false)?)?);
    }
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let exceed = conditions.iter().filter(|&&c| c > lambda).count();
            let (probability, stderr) = binomial(exceed, trials);
            let bound = (n == p).then(|| tail_bound(n, lambda));
            TailEstimate {
                lambda,
                probability,
                stderr,
                bound,
                flagged: bound.is_some_and(|b| probability > b + 3.0 * stderr),
            }
        })
        .collect())
}
