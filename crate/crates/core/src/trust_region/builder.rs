use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::condition_number;
use crate::model::QuadraticModel;
use crate::models::{
    interpolate, interpolation_matrix, mfn_model, regress, sparse_l1_model, MonomialBasis, SampleSet,
};
use crate::objective::Objective;
use crate::sampling::{ball_uniform_set, coordinate_set, gaussian_set, greedy_reuse, Archive, Rng};

/// Fresh sample sets drawn before a random builder gives up.
pub const MAX_BUILD_ATTEMPTS: usize = 20;

/// Greedy sets whose scaled linear block is conditioned worse than this get
/// fresh points.
pub const GREEDY_LINEAR_CONDITION: f64 = 1e6;

/// What a builder may see of the optimizer state.
pub struct BuildContext<'a> {
    pub center: &'a DVector<f64>,
    pub f_center: f64,
    pub delta: f64,
    pub archive: &'a mut Archive,
}

/// Produces the model for one iteration.
///
/// Implementations evaluate the objective only through `objective`, record
/// every evaluation in `ctx.archive`, and return a model centered at
/// `ctx.center` whose constant is `ctx.f_center`.
pub trait BuildModel {
    fn build(&mut self, ctx: BuildContext<'_>, objective: &mut Objective<'_>, rng: &mut Rng) -> Result<QuadraticModel>;
}

impl<B: BuildModel + ?Sized> BuildModel for &mut B {
    fn build(&mut self, ctx: BuildContext<'_>, objective: &mut Objective<'_>, rng: &mut Rng) -> Result<QuadraticModel> {
        (**self).build(ctx, objective, rng)
    }
}

/// The built-in model strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelBuilder {
    /// Determined quadratic interpolation on the coordinate set plus the
    /// points `x + h(eᵢ + eⱼ)`, `i < j`, with spacing `h = min(δ, spacing)`.
    CoordinateQuadratic { spacing: f64 },
    /// Minimum-norm quadratic model on `{x, x ± δeᵢ}`.
    CoordinateMfn,
    /// Minimum-norm quadratic model on `points` uniform points in the ball.
    BallMfn { points: usize },
    /// ℓ1 quadratic model on `points` uniform points in the ball.
    BallL1 { points: usize },
    /// Minimum-norm quadratic model on reused archive points.
    GreedyMfn { max_points: usize },
    /// ℓ1 quadratic model on reused archive points.
    GreedyL1 { max_points: usize },
    /// Determined quadratic interpolation on uniform points in the ball.
    BallInterpolation,
    /// Linear interpolation (or regression) on `points` Gaussian points.
    GaussianLinear { points: usize },
}

/// Evaluates every point except an exact copy of the center, archiving each
/// new value. Results follow the set order.
pub fn evaluate_set(ctx: &mut BuildContext<'_>, objective: &mut Objective<'_>, set: &SampleSet) -> Vec<f64> {
    set.points
        .iter()
        .map(|y| {
            if y == ctx.center {
                ctx.f_center
            } else {
                let f = objective.evaluate(y);
                ctx.archive.push(y.clone(), f);
                f
            }
        })
        .collect()
}

fn retryable(err: &Error) -> bool {
    matches!(
        err,
        Error::NotPoised { .. } | Error::Residual { .. } | Error::NotConverged { .. } | Error::RankDeficient { .. }
    )
}

fn diagonal_pairs_set(center: &DVector<f64>, delta: f64) -> SampleSet {
    let n = center.len();
    let mut set = coordinate_set(center, delta);
    for i in 0..n {
        for j in i + 1..n {
            let mut y = center.clone();
            y[i] += delta;
            y[j] += delta;
            set.points.push(y);
        }
    }
    set
}

fn linear_block_condition(set: &SampleSet) -> Result<f64> {
    let m = interpolation_matrix(&MonomialBasis::linear(set.dim()), set, true)?;
    condition_number(&m)
}

impl ModelBuilder {
    /// Coordinate quadratic interpolation sampled at the trust-region radius.
    pub const COORDINATE_QUADRATIC: ModelBuilder = ModelBuilder::CoordinateQuadratic {
        spacing: f64::INFINITY,
    };

    fn fit_random(
        &self,
        ctx: &mut BuildContext<'_>,
        objective: &mut Objective<'_>,
        rng: &mut Rng,
    ) -> Result<QuadraticModel> {
        let n = ctx.center.len();
        let mut last = None;
        for _ in 0..MAX_BUILD_ATTEMPTS {
            let set = match *self {
                ModelBuilder::BallMfn { points } | ModelBuilder::BallL1 { points } => {
                    ball_uniform_set(ctx.center, ctx.delta, points, rng)?
                }
                ModelBuilder::BallInterpolation => {
                    ball_uniform_set(ctx.center, ctx.delta, MonomialBasis::quadratic(n).len() - 1, rng)?
                }
                ModelBuilder::GaussianLinear { points } => gaussian_set(ctx.center, ctx.delta, points, rng)?,
                _ => unreachable!("deterministic builder"),
            };
            let values = evaluate_set(ctx, objective, &set);
            let fit = match *self {
                ModelBuilder::BallMfn { .. } => mfn_model(&set, &values),
                ModelBuilder::BallL1 { .. } => sparse_l1_model(&set, &values),
                ModelBuilder::BallInterpolation => interpolate(&set, &values, &MonomialBasis::quadratic(n)),
                ModelBuilder::GaussianLinear { points } => {
                    let basis = MonomialBasis::linear(n);
                    if points + 1 == basis.len() {
                        interpolate(&set, &values, &basis)
                    } else {
                        regress(&set, &values, &basis)
                    }
                }
                _ => unreachable!("deterministic builder"),
            };
            match fit {
                Ok(fit) => return Ok(fit.model),
                Err(e) if retryable(&e) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        log::debug!("random builder exhausted: {last:?}");
        Err(Error::SampleSetExhausted {
            attempts: MAX_BUILD_ATTEMPTS,
        })
    }

    fn fit_greedy(
        &self,
        ctx: &mut BuildContext<'_>,
        objective: &mut Objective<'_>,
        rng: &mut Rng,
        max_points: usize,
        sparse: bool,
    ) -> Result<QuadraticModel> {
        let n = ctx.center.len();
        let cap = max_points.clamp(n + 1, MonomialBasis::quadratic(n).len());
        let mut set = greedy_reuse(ctx.archive, ctx.center, ctx.delta, cap)?;
        let mut values = set.values.take().unwrap_or_default();
        let mut reused = set.len();

        for _ in 0..MAX_BUILD_ATTEMPTS + n {
            if set.len() > n && linear_block_condition(&set)? <= GREEDY_LINEAR_CONDITION {
                let fit = if sparse {
                    sparse_l1_model(&set, &values)
                } else {
                    mfn_model(&set, &values)
                };
                match fit {
                    Ok(fit) => return Ok(fit.model),
                    Err(e) if retryable(&e) => log::trace!("greedy fit rejected: {e}"),
                    Err(e) => return Err(e),
                }
            }
            if set.len() >= cap {
                // Reused points go first, farthest from the center first;
                // once none remain the oldest fresh point makes room.
                let drop = if reused > 1 {
                    let far = (1..reused)
                        .max_by(|&a, &b| {
                            let da = (&set.points[a] - ctx.center).norm();
                            let db = (&set.points[b] - ctx.center).norm();
                            da.total_cmp(&db).then(b.cmp(&a))
                        })
                        .unwrap_or(1);
                    reused -= 1;
                    far
                } else {
                    1
                };
                set.points.remove(drop);
                values.remove(drop);
            }
            let fresh = ball_uniform_set(ctx.center, ctx.delta, 1, rng)?;
            let y = fresh.points[1].clone();
            let f = objective.evaluate(&y);
            ctx.archive.push(y.clone(), f);
            set.points.push(y);
            values.push(f);
        }
        Err(Error::SampleSetExhausted {
            attempts: MAX_BUILD_ATTEMPTS + n,
        })
    }
}

impl BuildModel for ModelBuilder {
    fn build(&mut self, mut ctx: BuildContext<'_>, objective: &mut Objective<'_>, rng: &mut Rng) -> Result<QuadraticModel> {
        let n = ctx.center.len();
        let model = match *self {
            ModelBuilder::CoordinateQuadratic { spacing } => {
                let set = diagonal_pairs_set(ctx.center, ctx.delta.min(spacing));
                let values = evaluate_set(&mut ctx, objective, &set);
                interpolate(&set, &values, &MonomialBasis::quadratic(n))?.model
            }
            ModelBuilder::CoordinateMfn => {
                let set = coordinate_set(ctx.center, ctx.delta);
                let values = evaluate_set(&mut ctx, objective, &set);
                mfn_model(&set, &values)?.model
            }
            ModelBuilder::GreedyMfn { max_points } => self.fit_greedy(&mut ctx, objective, rng, max_points, false)?,
            ModelBuilder::GreedyL1 { max_points } => self.fit_greedy(&mut ctx, objective, rng, max_points, true)?,
            _ => self.fit_random(&mut ctx, objective, rng)?,
        };
        Ok(model.with_constant(ctx.f_center))
    }
}
