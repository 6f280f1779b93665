use approx::assert_relative_eq;
use fpkit_core::contract::{check_enriched_almost, EnrichedAlmostParams, SamplingPlan};
use fpkit_core::iterate::{
    canonical_lambda, cauchy_bound, check_bounds, krasnoselskij, picard, rate_check,
    reduced_condition_check, reduced_delta, run, AveragedMap, IterationConfig, Status, StopMode,
    StoppingRule,
};
use fpkit_core::space::{MapDescriptor, Point};
use fpkit_core::TAU_FIX;
use proptest::prelude::*;

fn ex2() -> MapDescriptor {
    MapDescriptor::gallery("ex2-piecewise").unwrap()
}

fn rule(tol: f64) -> StoppingRule {
    StoppingRule::new(tol, 10_000, StopMode::Residual).unwrap()
}

#[test]
fn spec_iteration_examples() {
    let t = ex2();
    let at_fix = picard(&t, &Point::scalar(0.5), &rule(1e-12)).unwrap();
    assert_eq!((at_fix.status, at_fix.steps()), (Status::Converged, 0));

    let quarter = krasnoselskij(&t, 0.25, &Point::scalar(0.0), &rule(1e-12)).unwrap();
    let first: Vec<f64> = quarter.iterates.iter().take(3).map(Point::x).collect();
    assert_eq!(first, vec![0.0, 0.25, 0.375]);
    assert!((quarter.limit.unwrap().x() - 0.5).abs() < 1e-9);

    let upper = krasnoselskij(&t, 0.25, &Point::scalar(4.0 / 3.0), &rule(1e-12)).unwrap();
    assert!((upper.limit.unwrap().x() - 1.0).abs() < 1e-9);

    let half = MapDescriptor::affine_1d(0.5, 0.0, 0.0, 1.0).unwrap();
    let tr = picard(&half, &Point::scalar(1.0), &rule(1e-8)).unwrap();
    assert!(tr.converged());
    assert!(tr.limit.as_ref().unwrap().x().abs() <= 2.0 * TAU_FIX);
    // residual 2^-(n+1) must also reach τ_fix, so a few more steps than 2^-n ≤ 1e-8.
    assert!((26..=30).contains(&tr.steps()), "{} steps", tr.steps());
}

#[test]
fn canonical_parameters() {
    let p = |b, t| EnrichedAlmostParams::new(b, t, 0.0).unwrap();
    assert_eq!(canonical_lambda(&p(1.0, 1.0)), 0.5);
    assert_eq!(canonical_lambda(&p(0.0, 0.5)), 1.0);
    assert_eq!(canonical_lambda(&p(3.0, 2.0)), 0.25);
    assert_eq!(reduced_delta(&p(1.0, 1.0)), 0.5);
    assert_eq!(reduced_delta(&p(0.0, 0.9)), 0.9);
    assert_eq!(reduced_delta(&p(3.0, 2.0)), 0.5);
}

#[test]
fn reduced_check_on_identity_and_failures() {
    let id = MapDescriptor::gallery("identity-01").unwrap();
    let p = EnrichedAlmostParams::new(0.0, 0.5, 1.0).unwrap();
    assert!(reduced_condition_check(&id, &p, &SamplingPlan::grid(1e-2))
        .unwrap()
        .is_certified());

    // A falsified triple stays falsified, and the witness is the same pair.
    let p = EnrichedAlmostParams::new(0.0, 0.5, 1.0).unwrap();
    let plan = SamplingPlan::grid(1e-2);
    let direct = check_enriched_almost(&ex2(), p, &plan).unwrap();
    let reduced = reduced_condition_check(&ex2(), &p, &plan).unwrap();
    assert!(direct.is_falsified() && reduced.is_falsified());
    assert_eq!(direct.worst_pair, reduced.worst_pair);
}

#[test]
fn rate_on_closed_form_trace() {
    let tr = krasnoselskij(&ex2(), 0.25, &Point::scalar(0.0), &rule(1e-12)).unwrap();
    let rep = rate_check(&tr, Some(&Point::scalar(0.5)), 0.5).unwrap();
    assert!(rep.passed());
    assert_relative_eq!(rep.max_error_ratio.unwrap(), 0.5, epsilon = 1e-6);

    let still = picard(&ex2(), &Point::scalar(1.0), &rule(1e-12)).unwrap();
    assert!(rate_check(&still, None, 0.5).unwrap().passed());
}

/// A 1-D affine map with a certified enriched contraction triple `(b, θ, 0)`.
fn enriched_affine(m: f64, x_star: f64) -> (MapDescriptor, EnrichedAlmostParams) {
    let map = MapDescriptor::affine_1d(m, (1.0 - m) * x_star, -2.0, 2.0).unwrap();
    let b = (-m).max(0.0) + 0.5;
    let theta = (b + m).abs() + 0.25 * (b + 1.0 - (b + m).abs());
    (map, EnrichedAlmostParams::new(b, theta, 0.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn averaged_residual_is_scaled(x in 0.0f64..=4.0 / 3.0, lambda in 1e-6f64..=1.0) {
        let a = AveragedMap::new(ex2(), lambda).unwrap();
        let x = Point::scalar(x);
        let base = ex2().residual(&x).unwrap();
        let r = a.residual(&x).unwrap();
        prop_assert!((r - lambda * base).abs() <= 1e-12 * (lambda * base).max(f64::MIN_POSITIVE) + 1e-300);
    }

    #[test]
    fn unit_lambda_is_picard(m in -0.95f64..0.95, c in -0.5f64..0.5, x0 in -1.0f64..1.0) {
        let t = MapDescriptor::affine_1d(m, c, -20.0, 20.0).unwrap();
        let r = StoppingRule::new(1e-13, 500, StopMode::StepNorm).unwrap();
        let a = picard(&t, &Point::scalar(x0), &r).unwrap();
        let b = krasnoselskij(&t, 1.0, &Point::scalar(x0), &r).unwrap();
        prop_assert_eq!(a, b);
    }

    // With λ ≤ 1/2 the factor 1−2λ is nonnegative and iterates stay in [y0, 1/2).
    #[test]
    fn closed_form_holds(y0 in 0.0f64..(2.0 / 3.0), lambda in 0.01f64..=0.5) {
        let tr = krasnoselskij(&ex2(), lambda, &Point::scalar(y0), &rule(1e-13)).unwrap();
        prop_assert!(tr.converged());
        let r = 1.0 - 2.0 * lambda;
        for (n, x) in tr.iterates.iter().enumerate() {
            let expect = 0.5 + r.powi(n as i32) * (y0 - 0.5);
            prop_assert!((x.x() - expect).abs() <= 1e-12, "n = {}", n);
        }
    }

    #[test]
    fn bounds_hold_on_certified_maps(m in -3.0f64..0.9, x_star in -1.0f64..1.0, x0 in -2.0f64..2.0) {
        let (map, p) = enriched_affine(m, x_star);
        prop_assert!(check_enriched_almost(&map, p, &SamplingPlan::grid(0.05)).unwrap().is_certified());
        let (lambda, delta) = (canonical_lambda(&p), reduced_delta(&p));
        let cfg = IterationConfig::new(StoppingRule::new(1e-13, 20_000, StopMode::Auto).unwrap())
            .with_delta(delta);
        let tr = run(&map, lambda, &Point::scalar(x0), &cfg).unwrap();
        prop_assert!(tr.converged());
        let bc = check_bounds(&tr, None, delta, TAU_FIX).unwrap();
        prop_assert!(bc.passed(), "{:?}", bc);

        let d01 = tr.step_norms.first().copied().unwrap_or(0.0);
        let xs: Vec<f64> = tr.iterates.iter().map(Point::x).collect();
        for n in 0..xs.len() {
            for q in 1..(xs.len() - n) {
                let bound = cauchy_bound(delta, n, q, d01).unwrap();
                prop_assert!((xs[n] - xs[n + q]).abs() <= bound + TAU_FIX);
            }
        }
    }

    #[test]
    fn piecewise_bounds_from_any_start(y0 in 0.0f64..=4.0 / 3.0) {
        let p = EnrichedAlmostParams::new(1.0, 1.0, 3.0).unwrap();
        let cfg = IterationConfig::new(StoppingRule::new(1e-13, 1000, StopMode::Auto).unwrap())
            .with_delta(reduced_delta(&p));
        let tr = run(&ex2(), canonical_lambda(&p), &Point::scalar(y0), &cfg).unwrap();
        prop_assert!(tr.converged());
        prop_assert!(check_bounds(&tr, None, 0.5, TAU_FIX).unwrap().passed());
    }
}
