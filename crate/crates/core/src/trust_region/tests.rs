use super::*;
use crate::functions::{Quadratic, Rosenbrock, Sphere};
use crate::objective::Function;
use alloc::vec;
use nalgebra::DMatrix;

fn coordinate() -> ModelBuilder {
    ModelBuilder::COORDINATE_QUADRATIC
}

fn config() -> TrustRegionConfig {
    TrustRegionConfig::default()
}

#[test]
fn tau_examples() {
    let g = DVector::zeros(2);
    let h = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -2.0]);
    assert_eq!(tau(&g, &h).unwrap(), 2.0);
    let h = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0]);
    assert_eq!(tau(&g, &h).unwrap(), 0.0);
    assert_eq!(tau(&g, &DMatrix::identity(2, 2)).unwrap(), 0.0);
    // Zero Hessian falls back to the gradient norm.
    let g = DVector::from_vec(vec![3.0, 4.0]);
    assert_eq!(tau(&g, &DMatrix::zeros(2, 2)).unwrap(), 5.0);
    assert_eq!(tau(&g, &(DMatrix::identity(2, 2) * 10.0)).unwrap(), 0.5);
}

#[test]
fn first_order_rule() {
    let c = config();
    assert_eq!(update_radius(Driver::FirstOrder, &c, Some(0.5), 2.0, 1.0), (true, 2.0));
    assert_eq!(update_radius(Driver::FirstOrder, &c, Some(0.5), 0.9, 1.0), (false, 0.5));
    assert_eq!(update_radius(Driver::FirstOrder, &c, Some(0.05), 2.0, 1.0), (false, 0.5));
    assert_eq!(update_radius(Driver::FirstOrder, &c, None, 2.0, 1.0), (false, 0.5));
    assert_eq!(update_radius(Driver::FirstOrder, &c, Some(1.0), 100.0, 8.0), (true, 10.0));
}

#[test]
fn three_threshold_rule() {
    let c = config();
    assert_eq!(update_radius(Driver::ThreeThreshold, &c, Some(0.5), 0.7, 1.0), (true, 1.0));
    assert_eq!(update_radius(Driver::ThreeThreshold, &c, Some(0.5), 0.3, 1.0), (true, 0.5));
    assert_eq!(update_radius(Driver::ThreeThreshold, &c, Some(0.5), 1.0, 1.0), (true, 2.0));
    assert_eq!(update_radius(Driver::ThreeThreshold, &c, Some(0.01), 5.0, 1.0), (false, 0.5));
}

#[test]
fn second_order_rule_uses_model_measure() {
    let c = config();
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let t = tau(&DVector::zeros(2), &h).unwrap();
    assert_eq!(t, 1.0);
    assert_eq!(update_radius(Driver::SecondOrder, &c, Some(0.3), t, 0.5), (true, 1.0));
    assert_eq!(update_radius(Driver::SecondOrder, &c, Some(0.05), t, 0.5), (false, 0.25));
    assert_eq!(update_radius(Driver::SecondOrder, &c, Some(1.0), 0.0, 0.5), (false, 0.25));
}

#[test]
fn config_validation() {
    assert!(config().validate().is_ok());
    let bad = [
        TrustRegionConfig { eta1: 0.0, ..config() },
        TrustRegionConfig { eta3: 2.0, ..config() },
        TrustRegionConfig { gamma: 1.0, ..config() },
        TrustRegionConfig { delta_0: 20.0, ..config() },
        TrustRegionConfig { delta_max: -1.0, ..config() },
    ];
    for c in bad {
        assert!(matches!(c.validate(), Err(Error::InvalidParameter { .. })), "{c:?}");
    }
}

#[test]
fn zero_budget_gives_empty_trace() {
    let mut obj = Objective::new(Sphere { dim: 2 });
    let c = TrustRegionConfig { budget: 0, ..config() };
    let r = run(Driver::FirstOrder, &mut coordinate(), &mut obj, &DVector::zeros(2), &c).unwrap();
    assert!(r.trace().is_empty());
    assert_eq!(r.termination, Termination::Budget);
    assert_eq!(obj.evaluations(), 0);
}

#[test]
fn exact_model_on_sphere() {
    let mut obj = Objective::new(Sphere { dim: 2 });
    let c = TrustRegionConfig {
        f_target: 1e-10,
        budget: 1000,
        ..config()
    };
    let r = run(Driver::FirstOrder, &mut coordinate(), &mut obj, &DVector::from_element(2, 1.0), &c)
        .unwrap();
    assert_eq!(r.termination, Termination::Target);
    assert!(r.evaluations <= 30, "{} evaluations", r.evaluations);
    for rec in r.trace().iter().filter(|r| r.rho.is_some()) {
        assert!((rec.rho.unwrap() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn perfect_model_rejects_only_on_small_gradient() {
    let mut obj = Objective::new(Sphere { dim: 2 });
    let c = TrustRegionConfig { budget: 60, ..config() };
    let mut state = TrustRegionState::new(DVector::from_vec(vec![0.3, -0.2]), 0.13, 1.0);
    let mut rng = Rng::seed_from_u64(0);
    for _ in 0..5 {
        let delta = state.delta;
        let out = step(Driver::FirstOrder, &mut state, &mut coordinate(), &mut obj, &c, &mut rng, None)
            .unwrap();
        if let Some(rho) = out.record.rho {
            assert!((rho - 1.0).abs() < 1e-8);
            assert_eq!(out.record.success, out.measure >= c.eta2 * delta);
        }
    }
}

#[test]
fn second_order_driver_finds_convex_minimizer() {
    let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
    let b = DVector::from_vec(vec![1.0, -1.0]);
    let q = Quadratic { c: 0.0, b: b.clone(), a: a.clone() };
    let xstar = -a.clone().lu().solve(&b).unwrap();
    let mut obj = Objective::new(q);
    let c = TrustRegionConfig {
        budget: 2000,
        eta2: 0.1,
        eta3: 0.05,
        ..config()
    };
    let r = run(Driver::SecondOrder, &mut coordinate(), &mut obj, &DVector::from_vec(vec![2.0, 2.0]), &c)
        .unwrap();
    assert!((&r.state.x - xstar).norm() < 1e-6, "{}", r.state.x);
    assert_eq!(r.termination, Termination::DeltaMin);
}

#[test]
fn trace_invariants_on_rosenbrock() {
    for driver in [Driver::FirstOrder, Driver::ThreeThreshold, Driver::SecondOrder] {
        for builder in [ModelBuilder::COORDINATE_QUADRATIC, ModelBuilder::BallMfn { points: 4 }, ModelBuilder::GreedyMfn { max_points: 6 }] {
            let mut obj = Objective::new(Rosenbrock::classic());
            let c = TrustRegionConfig {
                budget: 600,
                seed: 4,
                ..config()
            };
            let x0 = DVector::from_vec(vec![-1.2, 1.0]);
            let r = run(driver, &mut { builder }, &mut obj, &x0, &c).unwrap();
            assert_eq!(r.trace().len(), r.iterations());
            assert_eq!(r.path.len(), r.iterations() + 1);
            assert_eq!(r.evaluations, obj.evaluations());
            let mut f = Rosenbrock::classic().value(&x0);
            let mut delta = c.delta_0;
            for (rec, pair) in r.trace().iter().zip(r.path.windows(2)) {
                assert!(rec.delta <= c.delta_max);
                let ratio = rec.delta / delta;
                let ok = [1.0 / c.gamma, c.gamma, 1.0].contains(&ratio) || rec.delta == c.delta_max;
                assert!(ok, "ratio {ratio}");
                if ratio == 1.0 && rec.delta != c.delta_max {
                    assert_eq!(driver, Driver::ThreeThreshold);
                }
                if rec.success {
                    assert!(rec.f < f);
                } else {
                    assert_eq!(rec.f, f);
                    assert_eq!(pair[0], pair[1]);
                }
                f = rec.f;
                delta = rec.delta;
            }
        }
    }
}

#[test]
fn runs_are_seed_deterministic() {
    let x0 = DVector::from_vec(vec![-1.2, 1.0]);
    let c = TrustRegionConfig {
        budget: 400,
        seed: 17,
        ..config()
    };
    let go = || {
        let mut obj = Objective::new(Rosenbrock::classic());
        run(Driver::FirstOrder, &mut ModelBuilder::BallL1 { points: 4 }, &mut obj, &x0, &c).unwrap()
    };
    assert_eq!(go(), go());
}

#[test]
fn successful_steps_meet_decrease_bound() {
    use crate::subproblem::cauchy_decrease_bound;
    let mut obj = Objective::new(Rosenbrock::classic());
    let c = TrustRegionConfig { budget: 400, ..config() };
    let mut state = TrustRegionState::new(DVector::from_vec(vec![-1.2, 1.0]), 24.2, 1.0);
    let mut rng = Rng::seed_from_u64(2);
    for _ in 0..40 {
        let delta = state.delta;
        let out = step(Driver::FirstOrder, &mut state, &mut coordinate(), &mut obj, &c, &mut rng, None)
            .unwrap();
        if out.record.success {
            let g = out.model.gradient().norm();
            let h = crate::linalg::spectral_norm(out.model.hessian()).unwrap();
            assert!(out.step.predicted_decrease >= cauchy_decrease_bound(g, h, delta) * (1.0 - 1e-10));
        }
    }
}
