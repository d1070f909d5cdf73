//! Trust-region drivers over randomly built models.
//!
//! Three update rules are provided (see [`Driver`]). All of them build a
//! model, compute a step with certified decrease, evaluate the trial point
//! once and update the radius by a factor in `{1/γ, 1, γ}`.

mod builder;

use alloc::vec::Vec;

use nalgebra::DVector;

pub use builder::{
    evaluate_set, BuildContext, BuildModel, ModelBuilder, GREEDY_LINEAR_CONDITION, MAX_BUILD_ATTEMPTS,
};

use crate::error::{Error, Result};
use crate::linalg::{smallest_eigenpair, spectral_norm};
use crate::model::{compute_rho, QuadraticModel};
use crate::models::{cap_hessian, check_fully_linear_at, probe_offsets, QualityConstants, DEFAULT_PROBES};
use crate::objective::Objective;
use crate::sampling::{Archive, Rng};
use crate::subproblem::{solve_first_order_with, solve_second_order_with, StepKind, StepResult, StepRule};

/// Iterations without a new minimum radius before a warning is logged.
pub const RADIUS_WARN_WINDOW: usize = 10_000;
/// Iterations without a new minimum radius before the run is aborted.
pub const RADIUS_STALL_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegionConfig {
    pub eta1: f64,
    pub eta2: f64,
    /// Lower threshold of the three-threshold rule; `0 < η3 ≤ η2`.
    pub eta3: f64,
    pub gamma: f64,
    pub delta_max: f64,
    pub delta_0: f64,
    /// Hessian cap for the first-order drivers.
    pub kappa_bhm: f64,
    /// Maximum number of function evaluations.
    pub budget: usize,
    pub seed: u64,
    /// Runs stop once the radius falls below this value.
    pub delta_min: f64,
    /// Runs stop once `f(x_k) ≤ f_target`.
    pub f_target: f64,
    pub step_rule: StepRule,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        Self {
            eta1: 0.1,
            eta2: 1.0,
            eta3: 0.5,
            gamma: 2.0,
            delta_max: 10.0,
            delta_0: 1.0,
            kappa_bhm: 1e6,
            budget: 10_000,
            seed: 0,
            delta_min: 1e-12,
            f_target: f64::NEG_INFINITY,
            step_rule: StepRule::Cauchy,
        }
    }
}

fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}

impl TrustRegionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta1 > 0.0 && self.eta1 < 1.0) {
            return Err(invalid("eta1", "must lie in (0, 1)"));
        }
        if !(self.eta2 > 0.0 && self.eta2.is_finite()) {
            return Err(invalid("eta2", "must be positive"));
        }
        if !(self.eta3 > 0.0 && self.eta3 <= self.eta2) {
            return Err(invalid("eta3", "must lie in (0, eta2]"));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be greater than 1"));
        }
        if !(self.delta_max > 0.0 && self.delta_max.is_finite()) {
            return Err(invalid("delta_max", "must be positive"));
        }
        if !(self.delta_0 > 0.0 && self.delta_0 <= self.delta_max) {
            return Err(invalid("delta_0", "must lie in (0, delta_max]"));
        }
        if self.kappa_bhm.is_nan() || self.kappa_bhm <= 0.0 {
            return Err(invalid("kappa_bhm", "must be positive"));
        }
        if !(self.delta_min >= 0.0 && self.delta_min < self.delta_0) {
            return Err(invalid("delta_min", "must lie in [0, delta_0)"));
        }
        if self.f_target.is_nan() {
            return Err(invalid("f_target", "must not be NaN"));
        }
        Ok(())
    }
}

/// One trace row, describing the state at the end of iteration `iter`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub success: bool,
    pub f: f64,
    pub delta: f64,
    /// `None` when the model predicted no decrease.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionState {
    pub x: DVector<f64>,
    pub f: f64,
    pub delta: f64,
    /// Completed iterations.
    pub k: usize,
    pub history: Vec<IterationRecord>,
    pub archive: Archive,
}

impl TrustRegionState {
    pub fn new(x: DVector<f64>, f: f64, delta: f64) -> Self {
        let mut archive = Archive::new();
        archive.push(x.clone(), f);
        Self {
            x,
            f,
            delta,
            k: 0,
            history: Vec::new(),
            archive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    /// Success needs `ρ ≥ η1` and `‖g‖ ≥ η2 δ`; the radius grows on success
    /// and shrinks otherwise.
    FirstOrder,
    /// Success needs `ρ ≥ η1`; the radius then shrinks, stays or grows as
    /// `‖g‖` falls below `η3 δ`, between `η3 δ` and `η2 δ`, or above `η2 δ`.
    ThreeThreshold,
    /// As [`Driver::FirstOrder`] with the second-order step and the model
    /// measure `τ^m` in place of `‖g‖`, without Hessian capping.
    SecondOrder,
}

/// `max{min[‖g‖, ‖g‖/‖H‖], -λ_min(H)}`, with `‖H‖ = 0` giving `‖g‖` for the
/// inner minimum.
pub fn tau(g: &DVector<f64>, h: &nalgebra::DMatrix<f64>) -> Result<f64> {
    let gnorm = g.norm();
    let hnorm = spectral_norm(h)?;
    let first = if hnorm > 0.0 { gnorm.min(gnorm / hnorm) } else { gnorm };
    let (lambda_min, _) = smallest_eigenpair(h)?;
    Ok(first.max(-lambda_min))
}

/// Radius update and acceptance for the given driver.
///
/// `measure` is `‖g_k‖` for the first-order drivers and `τ^m_k` for the
/// second-order driver. An undefined ratio is treated as a failure.
pub fn update_radius(driver: Driver, config: &TrustRegionConfig, rho: Option<f64>, measure: f64, delta: f64) -> (bool, f64) {
    let good = rho.is_some_and(|r| r >= config.eta1);
    let grow = (config.gamma * delta).min(config.delta_max);
    let shrink = delta / config.gamma;
    match driver {
        Driver::FirstOrder | Driver::SecondOrder => {
            if good && measure >= config.eta2 * delta {
                (true, grow)
            } else {
                (false, shrink)
            }
        }
        Driver::ThreeThreshold => {
            if !good {
                (false, shrink)
            } else if measure < config.eta3 * delta {
                (true, shrink)
            } else if measure < config.eta2 * delta {
                (true, delta)
            } else {
                (true, grow)
            }
        }
    }
}

/// Counters of the sufficient-accuracy monitor.
///
/// When the model is fully linear on the current ball (checked at the probe
/// set and at the trial step) and `δ ≤ min{‖g‖/κ_bhm, (1 - η1)‖g‖/(4κ_ef)}`,
/// the iteration must have `ρ ≥ η1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MonitorReport {
    /// Iterations on which the premise held.
    pub checked: usize,
    pub violations: usize,
}

/// Everything produced by one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub record: IterationRecord,
    pub model: QuadraticModel,
    pub step: StepResult,
    /// `‖g‖` or `τ^m`, whichever the driver tests.
    pub measure: f64,
    pub trial_value: Option<f64>,
    /// Whether the accuracy monitor's premise held on this iteration.
    pub monitor_premise: Option<bool>,
}

/// Performs one iteration of `driver`, updating `state` in place.
pub fn step(
    driver: Driver,
    state: &mut TrustRegionState,
    builder: &mut dyn BuildModel,
    objective: &mut Objective<'_>,
    config: &TrustRegionConfig,
    rng: &mut Rng,
    monitor: Option<&QualityConstants>,
) -> Result<StepOutcome> {
    let ctx = BuildContext {
        center: &state.x,
        f_center: state.f,
        delta: state.delta,
        archive: &mut state.archive,
    };
    let mut model = builder.build(ctx, objective, rng)?;
    let (step, measure) = match driver {
        Driver::FirstOrder | Driver::ThreeThreshold => {
            model = cap_hessian(model, config.kappa_bhm)?;
            let step = solve_first_order_with(&model, state.delta, config.step_rule)?;
            let measure = model.gradient().norm();
            (step, measure)
        }
        Driver::SecondOrder => {
            let step = solve_second_order_with(&model, state.delta, config.step_rule)?;
            let measure = tau(model.gradient(), model.hessian())?;
            (step, measure)
        }
    };

    let trial = &state.x + &step.step;
    let trial_value = if step.kind == StepKind::Zero {
        None
    } else {
        let f = objective.evaluate(&trial);
        state.archive.push(trial.clone(), f);
        Some(f)
    };
    // Model values relative to m(x_k).
    let rho = trial_value.and_then(|f| compute_rho(state.f, f, 0.0, -step.predicted_decrease));

    let monitor_premise = match (monitor, driver) {
        (Some(kappa), Driver::FirstOrder | Driver::ThreeThreshold) => {
            let g = model.gradient().norm();
            let radius_ok = state.delta <= (g / config.kappa_bhm).min((1.0 - config.eta1) * g / (4.0 * kappa.kappa_ef));
            let premise = radius_ok && {
                let mut offsets = probe_offsets(state.x.len(), state.delta, DEFAULT_PROBES);
                offsets.push(step.step.clone());
                check_fully_linear_at(&model, objective.function(), &state.x, state.delta, kappa, &offsets)?
            };
            Some(premise)
        }
        _ => None,
    };

    let (success, delta) = update_radius(driver, config, rho, measure, state.delta);
    if success {
        state.x = trial;
        state.f = trial_value.expect("successful steps are evaluated");
    }
    state.delta = delta;
    state.k += 1;
    let record = IterationRecord {
        iter: state.k,
        success,
        f: state.f,
        delta,
        rho,
    };
    state.history.push(record);
    Ok(StepOutcome {
        record,
        model,
        step,
        measure,
        trial_value,
        monitor_premise,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Budget,
    DeltaMin,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Final state; `f` is NaN when nothing was evaluated.
    pub state: TrustRegionState,
    pub termination: Termination,
    pub evaluations: usize,
    /// `x_0, x_1, …`, one entry per iteration plus the start.
    pub path: Vec<DVector<f64>>,
    pub monitor: MonitorReport,
}

impl RunResult {
    pub fn trace(&self) -> &[IterationRecord] {
        &self.state.history
    }

    pub fn iterations(&self) -> usize {
        self.state.k
    }
}

/// Runs `driver` from `x0` until the budget, `δ < δ_min` or `f ≤ f_target`.
pub fn run(
    driver: Driver,
    builder: &mut dyn BuildModel,
    objective: &mut Objective<'_>,
    x0: &DVector<f64>,
    config: &TrustRegionConfig,
) -> Result<RunResult> {
    run_with_monitor(driver, builder, objective, x0, config, None)
}

/// As [`run`], additionally checking the sufficient-accuracy property with
/// the given constants; requires analytic gradients.
pub fn run_with_monitor(
    driver: Driver,
    builder: &mut dyn BuildModel,
    objective: &mut Objective<'_>,
    x0: &DVector<f64>,
    config: &TrustRegionConfig,
    monitor: Option<QualityConstants>,
) -> Result<RunResult> {
    config.validate()?;
    if x0.len() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            found: x0.len(),
        });
    }
    let start = objective.evaluations();
    let used = |o: &Objective<'_>| o.evaluations() - start;
    let mut rng = Rng::seed_from_u64(config.seed);
    let mut report = MonitorReport::default();

    if config.budget == 0 {
        return Ok(RunResult {
            state: TrustRegionState::new(x0.clone(), f64::NAN, config.delta_0),
            termination: Termination::Budget,
            evaluations: 0,
            path: alloc::vec![x0.clone()],
            monitor: report,
        });
    }
    let f0 = objective.evaluate(x0);
    let mut state = TrustRegionState::new(x0.clone(), f0, config.delta_0);
    let mut path = alloc::vec![x0.clone()];
    let mut min_delta = state.delta;
    let mut since_new_min = 0usize;

    let termination = loop {
        if state.f <= config.f_target {
            break Termination::Target;
        }
        if state.delta < config.delta_min {
            break Termination::DeltaMin;
        }
        if used(objective) >= config.budget {
            break Termination::Budget;
        }
        let out = step(driver, &mut state, builder, objective, config, &mut rng, monitor.as_ref())?;
        if out.monitor_premise == Some(true) {
            report.checked += 1;
            if !out.record.rho.is_some_and(|r| r >= config.eta1) {
                report.violations += 1;
                log::warn!("iteration {}: accurate model with small radius was rejected", out.record.iter);
            }
        }
        path.push(state.x.clone());

        if state.delta < min_delta {
            min_delta = state.delta;
            since_new_min = 0;
        } else {
            since_new_min += 1;
            if since_new_min == RADIUS_WARN_WINDOW {
                log::warn!("radius has not reached a new minimum for {RADIUS_WARN_WINDOW} iterations");
            }
            if since_new_min >= RADIUS_STALL_LIMIT {
                return Err(Error::RadiusStalled {
                    iterations: since_new_min,
                });
            }
        }
    };

    Ok(RunResult {
        evaluations: used(objective),
        state,
        termination,
        path,
        monitor: report,
    })
}

#[cfg(test)]
mod tests;
