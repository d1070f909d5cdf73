use nalgebra::{DMatrix, DVector};
use probdfo_core::functions::{Rosenbrock, Sphere};
use probdfo_core::models::QualityConstants;
use probdfo_core::trust_region::{BuildContext, BuildModel};
use probdfo_core::{Function, Objective, QuadraticModel, Result as CoreResult, Rng};
use probdfo_harness::diagnostics::{condition_number_tail, estimate_model_quality_rate, tail_bound, QualityOrder};
use probdfo_harness::HarnessError;

/// Second-order Taylor model of `f` at the center.
struct Exact<'a>(&'a dyn Function);

impl BuildModel for Exact<'_> {
    fn build(&mut self, ctx: BuildContext<'_>, _: &mut Objective<'_>, _: &mut Rng) -> CoreResult<QuadraticModel> {
        let x = ctx.center;
        Ok(QuadraticModel::new(
            x.clone(),
            self.0.value(x),
            self.0.gradient(x).unwrap(),
            self.0.hessian(x).unwrap(),
        ))
    }
}

struct Zero;

impl BuildModel for Zero {
    fn build(&mut self, ctx: BuildContext<'_>, _: &mut Objective<'_>, _: &mut Rng) -> CoreResult<QuadraticModel> {
        let n = ctx.center.len();
        Ok(QuadraticModel::new(ctx.center.clone(), 0.0, DVector::zeros(n), DMatrix::zeros(n, n)))
    }
}

fn kappa(k: f64) -> QualityConstants {
    QualityConstants::new(k, k, k).unwrap()
}

#[test]
fn exact_model_always_passes() {
    let f = Rosenbrock::mild(2);
    let x = DVector::from_vec(vec![-1.2, 1.0]);
    for order in [QualityOrder::FullyLinear, QualityOrder::FullyQuadratic] {
        let est = estimate_model_quality_rate(
            &mut Exact(&f),
            &f,
            &x,
            1e-2,
            &kappa(1000.0),
            order,
            200,
            &mut Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!((est.rate, est.stderr, est.trials), (1.0, 0.0, 200));
    }
}

#[test]
fn zero_model_never_passes() {
    // ‖∇f(x)‖ = 200 while κ_eg δ = 1e-2.
    let f = Sphere { dim: 3 };
    let x = DVector::from_element(3, 100.0 / 3f64.sqrt());
    let est = estimate_model_quality_rate(
        &mut Zero,
        &f,
        &x,
        1e-3,
        &kappa(10.0),
        QualityOrder::FullyLinear,
        100,
        &mut Rng::seed_from_u64(1),
    )
    .unwrap();
    assert_eq!(est.rate, 0.0);
}

#[test]
fn too_few_trials_is_an_error() {
    let f = Sphere { dim: 2 };
    let r = estimate_model_quality_rate(
        &mut Zero,
        &f,
        &DVector::zeros(2),
        1.0,
        &kappa(1.0),
        QualityOrder::FullyLinear,
        99,
        &mut Rng::seed_from_u64(0),
    );
    assert!(matches!(r, Err(HarnessError::Config(_))));
}

#[test]
fn huge_threshold_has_vanishing_tail() {
    let table = condition_number_tail(2, 2, &[1e8], 10_000, &mut Rng::seed_from_u64(3)).unwrap();
    assert!(table[0].probability <= 1e-3, "{:?}", table[0]);
}

#[test]
fn square_tail_under_bound() {
    let table = condition_number_tail(2, 2, &[100.0], 100_000, &mut Rng::seed_from_u64(0)).unwrap();
    let e = table[0];
    let bound = tail_bound(2, 100.0);
    assert!((bound - 0.0519).abs() < 1e-4);
    assert_eq!(e.bound, Some(bound));
    assert!(!e.flagged);
    assert!(e.probability <= bound + 3.0 * e.stderr, "{e:?}");
}

#[test]
fn tail_is_monotone_in_lambda_and_deterministic() {
    let lambdas = [10.0, 50.0, 100.0, 1000.0];
    let a = condition_number_tail(3, 3, &lambdas, 2000, &mut Rng::seed_from_u64(9)).unwrap();
    let b = condition_number_tail(3, 3, &lambdas, 2000, &mut Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].probability >= w[1].probability));
}

#[test]
fn rectangular_tail_has_no_bound() {
    let table = condition_number_tail(2, 4, &[100.0], 1000, &mut Rng::seed_from_u64(0)).unwrap();
    assert_eq!(table[0].bound, None);
    assert!(!table[0].flagged);
}
