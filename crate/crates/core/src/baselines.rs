//! Comparison methods: compass search (CS), direct search over random
//! orthogonal bases (DSR) and Gaussian random search (RS).
//!
//! Polling is opportunistic. The poll order over a basis `Q` is
//! `+q₁, -q₁, +q₂, -q₂, …`; the step doubles (up to `step_max`) after a
//! successful poll and halves after a full unsuccessful one.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::sampling::{Archive, Rng};
use crate::trust_region::{IterationRecord, Termination};

/// Orthogonal `n × n` matrix whose first column is uniform on the sphere.
///
/// The first column is the normalized Gaussian draw `u`; the rest comes from
/// the Householder reflector mapping `e₁` to `±u`, with the sign chosen away
/// from cancellation.
pub fn random_orthogonal(n: usize, rng: &mut Rng) -> DMatrix<f64> {
    assert!(n >= 1, "random_orthogonal needs n >= 1");
    let u = rng.unit_vector(n);
    let s = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = u.clone();
    w[0] += s;
    let ww = w.dot(&w);
    let mut q = DMatrix::identity(n, n) - (&w * w.transpose()) * (2.0 / ww);
    // The reflector sends e₁ to -s·u.
    q.set_column(0, &u);
    q
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectSearchConfig {
    pub step_0: f64,
    pub step_max: f64,
    /// Runs stop once the step falls below this value.
    pub step_min: f64,
    /// Maximum number of function evaluations, including `f(x₀)`.
    pub budget: usize,
    pub f_target: f64,
    /// Random-search scale: the step at iteration `k` is `c_rs / k`.
    pub c_rs: f64,
    pub seed: u64,
}

impl Default for DirectSearchConfig {
    fn default() -> Self {
        Self {
            step_0: 1.0,
            step_max: 10.0,
            step_min: 1e-12,
            budget: 10_000,
            f_target: f64::NEG_INFINITY,
            c_rs: 1.0,
            seed: 0,
        }
    }
}

impl DirectSearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if !(self.step_max > 0.0 && self.step_max.is_finite()) {
            return bad("step_max", "must be positive");
        }
        if !(self.step_0 > 0.0 && self.step_0 <= self.step_max) {
            return bad("step_0", "must lie in (0, step_max]");
        }
        if self.step_min.is_nan() || self.step_min < 0.0 {
            return bad("step_min", "must be non-negative");
        }
        if !(self.c_rs > 0.0 && self.c_rs.is_finite()) {
            return bad("c_rs", "must be positive");
        }
        if self.f_target.is_nan() {
            return bad("f_target", "must not be NaN");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectSearchState {
    pub x: DVector<f64>,
    pub f: f64,
    pub step: f64,
    /// Completed iterations.
    pub k: usize,
    /// Evaluations charged to this run.
    pub evaluations: usize,
    pub history: Vec<IterationRecord>,
    pub archive: Archive,
}

impl DirectSearchState {
    /// Evaluates `f(x₀)` and starts the run.
    pub fn new(x: DVector<f64>, step: f64, objective: &mut Objective<'_>) -> Self {
        let f = objective.evaluate(&x);
        let mut archive = Archive::new();
        archive.push(x.clone(), f);
        Self {
            x,
            f,
            step,
            k: 0,
            evaluations: 1,
            history: Vec::new(),
            archive,
        }
    }

    fn evaluate(&mut self, y: &DVector<f64>, objective: &mut Objective<'_>) -> f64 {
        let f = objective.evaluate(y);
        self.evaluations += 1;
        self.archive.push(y.clone(), f);
        f
    }

    fn record(&mut self, success: bool) -> IterationRecord {
        self.k += 1;
        let record = IterationRecord {
            iter: self.k,
            success,
            f: self.f,
            delta: self.step,
            rho: None,
        };
        self.history.push(record);
        record
    }
}

/// One opportunistic poll over the columns of `±q`.
///
/// Stops early once `config.budget` evaluations have been charged.
pub fn poll_step(
    state: &mut DirectSearchState,
    objective: &mut Objective<'_>,
    q: &DMatrix<f64>,
    config: &DirectSearchConfig,
) -> IterationRecord {
    let mut success = false;
    'poll: for j in 0..q.ncols() {
        for sign in [1.0, -1.0] {
            if state.evaluations >= config.budget {
                break 'poll;
            }
            let y = &state.x + q.column(j) * (sign * state.step);
            let f = state.evaluate(&y, objective);
            if f < state.f {
                state.x = y;
                state.f = f;
                success = true;
                break 'poll;
            }
        }
    }
    state.step = if success {
        (2.0 * state.step).min(config.step_max)
    } else {
        state.step / 2.0
    };
    state.record(success)
}

/// Compass search: polls the positive basis `[I -I]`.
pub fn cs_step(state: &mut DirectSearchState, objective: &mut Objective<'_>, config: &DirectSearchConfig) -> IterationRecord {
    let n = state.x.len();
    poll_step(state, objective, &DMatrix::identity(n, n), config)
}

/// Direct search over `[Q -Q]` with a fresh random orthogonal `Q`.
pub fn dsr_step(
    state: &mut DirectSearchState,
    objective: &mut Objective<'_>,
    rng: &mut Rng,
    config: &DirectSearchConfig,
) -> IterationRecord {
    let q = random_orthogonal(state.x.len(), rng);
    poll_step(state, objective, &q, config)
}

/// Random search: tries `x + (c_rs / k) z` with standard normal `z`, where
/// `k ≥ 1` is the iteration number, and accepts on decrease.
pub fn rs_step(
    state: &mut DirectSearchState,
    objective: &mut Objective<'_>,
    rng: &mut Rng,
    k: usize,
    config: &DirectSearchConfig,
) -> IterationRecord {
    assert!(k >= 1, "random search iterations start at 1");
    let z = rng.normal_vector(state.x.len());
    state.step = config.c_rs / k as f64;
    let mut success = false;
    if state.evaluations < config.budget {
        let y = &state.x + z * state.step;
        let f = state.evaluate(&y, objective);
        if f < state.f {
            state.x = y;
            state.f = f;
            success = true;
        }
    }
    state.record(success)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    CompassSearch,
    RandomDirectSearch,
    RandomSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub state: DirectSearchState,
    pub termination: Termination,
    pub evaluations: usize,
    pub path: Vec<DVector<f64>>,
}

impl BaselineResult {
    pub fn trace(&self) -> &[IterationRecord] {
        &self.state.history
    }
}

/// Runs a baseline until the budget, `step < step_min` (direct searches
/// only) or `f ≤ f_target`.
pub fn run_baseline(
    method: Baseline,
    objective: &mut Objective<'_>,
    x0: &DVector<f64>,
    config: &DirectSearchConfig,
) -> Result<BaselineResult> {
    config.validate()?;
    if x0.len() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            found: x0.len(),
        });
    }
    if config.budget == 0 {
        return Ok(BaselineResult {
            state: DirectSearchState {
                x: x0.clone(),
                f: f64::NAN,
                step: config.step_0,
                k: 0,
                evaluations: 0,
                history: Vec::new(),
                archive: Archive::new(),
            },
            termination: Termination::Budget,
            evaluations: 0,
            path: alloc::vec![x0.clone()],
        });
    }
    let mut rng = Rng::seed_from_u64(config.seed);
    let mut state = DirectSearchState::new(x0.clone(), config.step_0, objective);
    let mut path = alloc::vec![x0.clone()];
    let termination = loop {
        if state.f <= config.f_target {
            break Termination::Target;
        }
        if method != Baseline::RandomSearch && state.step < config.step_min {
            break Termination::DeltaMin;
        }
        if state.evaluations >= config.budget {
            break Termination::Budget;
        }
        match method {
            Baseline::CompassSearch => cs_step(&mut state, objective, config),
            Baseline::RandomDirectSearch => dsr_step(&mut state, objective, &mut rng, config),
            Baseline::RandomSearch => {
                let k = state.k + 1;
                rs_step(&mut state, objective, &mut rng, k, config)
            }
        };
        path.push(state.x.clone());
    };
    Ok(BaselineResult {
        evaluations: state.evaluations,
        state,
        termination,
        path,
    })
}
