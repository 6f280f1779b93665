//! Picard and Krasnoselskij iteration, error estimates and rate checks.

mod bounds;
mod engine;
mod reduced;
mod trace;

pub use bounds::{
    aposteriori_bound, apriori_bound, cauchy_bound, check_bounds, merged_bound, rate_check,
    BoundCheck, RateReport,
};
pub use engine::{krasnoselskij, picard, run, AveragedMap, IterationConfig, CYCLE_WINDOW};
pub use reduced::{canonical_lambda, reduced_condition_check, reduced_delta};
pub use trace::{BoundRow, History, IterationTrace, Status, StopMode, StoppingRule};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::{EnrichedAlmostParams, SamplingPlan, Verdict};
    use crate::space::{MapDescriptor, Point};
    use crate::Error;

    fn rule(tol: f64, max_iter: usize, mode: StopMode) -> StoppingRule {
        StoppingRule::new(tol, max_iter, mode).unwrap()
    }

    #[test]
    fn picard_cycles_on_piecewise() {
        let t = MapDescriptor::gallery("ex2-piecewise").unwrap();
        let tr = picard(
            &t,
            &Point::scalar(0.2),
            &rule(1e-12, 100, StopMode::Residual),
        )
        .unwrap();
        assert_eq!(tr.status, Status::CycleDetected);
        let cyc: Vec<f64> = tr.cycle.as_ref().unwrap().iter().map(Point::x).collect();
        assert_eq!(cyc.len(), 2);
        assert!((cyc[0] - 0.8).abs() < 1e-12 && (cyc[1] - 1.2).abs() < 1e-12);
        assert!(tr.limit.is_none());
    }

    #[test]
    fn krasnoselskij_halves_on_piecewise() {
        let t = MapDescriptor::gallery("ex2-piecewise").unwrap();
        let tr = krasnoselskij(
            &t,
            0.5,
            &Point::scalar(0.2),
            &rule(1e-12, 100, StopMode::Residual),
        )
        .unwrap();
        assert_eq!(tr.status, Status::Converged);
        assert_eq!(tr.steps(), 1);
        assert!((tr.limit.unwrap().x() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_for_general_lambda() {
        let t = MapDescriptor::gallery("ex2-piecewise").unwrap();
        let lam = 0.3;
        let (y0, r) = (0.2f64, 1.0 - 2.0 * lam);
        let tr = krasnoselskij(
            &t,
            lam,
            &Point::scalar(y0),
            &rule(1e-14, 200, StopMode::Residual),
        )
        .unwrap();
        for (n, x) in tr.iterates.iter().enumerate() {
            let expect = 0.5 + r.powi(n as i32) * (y0 - 0.5);
            assert!((x.x() - expect).abs() < 1e-12, "n={n}");
        }
        assert!(tr.converged());
    }

    #[test]
    fn start_outside_domain_is_an_error() {
        let t = MapDescriptor::gallery("ex2-piecewise").unwrap();
        let err = picard(&t, &Point::scalar(2.0), &StoppingRule::default()).unwrap_err();
        assert!(err.is_domain());
    }

    #[test]
    fn leaving_the_domain_is_a_status() {
        let t = MapDescriptor::affine_1d(2.0, 0.0, -1.0, 1.0).unwrap();
        let tr = picard(
            &t,
            &Point::scalar(0.3),
            &rule(1e-12, 50, StopMode::Residual),
        )
        .unwrap();
        assert_eq!(tr.status, Status::DomainExit);
        assert!((tr.exit_point.unwrap().x() - 1.2).abs() < 1e-12);
        assert_eq!(tr.iterates.len(), tr.residuals.len());
        assert_eq!(tr.iterates.len(), tr.step_norms.len() + 1);
    }

    #[test]
    fn invalid_lambda_and_rules() {
        let t = MapDescriptor::gallery("identity-01").unwrap();
        let x0 = Point::scalar(0.5);
        for lam in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                krasnoselskij(&t, lam, &x0, &StoppingRule::default()),
                Err(Error::Config(_))
            ));
        }
        assert!(StoppingRule::new(0.0, 10, StopMode::Residual).is_err());
        assert!(StoppingRule::new(1e-3, 0, StopMode::Residual).is_err());
        let cfg = IterationConfig::new(rule(1e-3, 10, StopMode::AposterioriBound));
        assert!(run(&t, 1.0, &x0, &cfg).is_err());
    }

    #[test]
    fn identity_converges_immediately() {
        let t = MapDescriptor::gallery("identity-01").unwrap();
        let tr = picard(&t, &Point::scalar(0.25), &StoppingRule::default()).unwrap();
        assert!(tr.converged());
        assert_eq!(tr.steps(), 0);
    }

    #[test]
    fn halving_map_bounds_and_rate() {
        let t = MapDescriptor::affine_1d(0.5, 0.0, -1.0, 1.0).unwrap();
        let cfg = IterationConfig::new(rule(1e-12, 200, StopMode::Auto)).with_delta(0.5);
        let tr = run(&t, 1.0, &Point::scalar(1.0), &cfg).unwrap();
        assert!(tr.converged());
        let star = Point::scalar(0.0);
        let bc = check_bounds(&tr, Some(&star), 0.5, 1e-12).unwrap();
        assert!(bc.passed(), "{bc:?}");
        let rr = rate_check(&tr, Some(&star), 0.5).unwrap();
        assert!(rr.passed());
        assert!((rr.max_step_ratio.unwrap() - 0.5).abs() < 1e-12);
        let rows = tr.bounds.as_ref().unwrap();
        assert_eq!(rows[0].apriori, 1.0);
        assert_eq!(rows[0].aposteriori, None);
        assert_eq!(rows[1].aposteriori, Some(0.5));
    }

    #[test]
    fn bound_functions() {
        assert_eq!(apriori_bound(0.5, 1.0, 2).unwrap(), 0.5);
        assert_eq!(aposteriori_bound(0.5, 0.25).unwrap(), 0.25);
        assert_eq!(
            merged_bound(0.5, 1, 0.25).unwrap(),
            aposteriori_bound(0.5, 0.25).unwrap()
        );
        assert_eq!(cauchy_bound(0.5, 0, 1, 1.0).unwrap(), 1.0);
        for d in [0.0, 1.0, -0.5, 2.0] {
            assert!(apriori_bound(d, 1.0, 1).is_err());
            assert!(aposteriori_bound(d, 1.0).is_err());
        }
    }

    #[test]
    fn slow_rate_is_reported() {
        let t = MapDescriptor::affine_1d(0.9, 0.0, -1.0, 1.0).unwrap();
        let tr = picard(
            &t,
            &Point::scalar(1.0),
            &rule(1e-12, 400, StopMode::Residual),
        )
        .unwrap();
        let rr = rate_check(&tr, Some(&Point::scalar(0.0)), 0.5).unwrap();
        assert_eq!(rr.first_violation, Some(1));
        assert!(!rr.passed());
    }

    #[test]
    fn thin_history_keeps_diagnostics() {
        let t = MapDescriptor::affine_1d(0.5, 0.0, -1.0, 1.0).unwrap();
        let full = run(&t, 1.0, &Point::scalar(1.0), &IterationConfig::default()).unwrap();
        let thin = run(
            &t,
            1.0,
            &Point::scalar(1.0),
            &IterationConfig::default().thin(),
        )
        .unwrap();
        assert_eq!(thin.iterates.len(), 2);
        assert_eq!(thin.step_norms, full.step_norms);
        assert_eq!(thin.last(), full.last());
        assert!(thin.to_csv().is_err());
    }

    #[test]
    fn csv_layout() {
        let t = MapDescriptor::affine_1d(0.5, 0.0, -1.0, 1.0).unwrap();
        let cfg = IterationConfig::new(rule(0.3, 10, StopMode::Residual)).with_delta(0.5);
        let tr = run(&t, 1.0, &Point::scalar(1.0), &cfg).unwrap();
        let csv = tr.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("n,x0,step_norm,residual,apriori,aposteriori")
        );
        assert_eq!(lines.next(), Some("0,1,0.5,0.5,1,"));
        assert_eq!(lines.next(), Some("1,0.5,0.25,0.25,0.5,0.5"));
    }

    #[test]
    fn averaged_map_residual_scales() {
        let t = MapDescriptor::gallery("ex2-piecewise").unwrap();
        let a = AveragedMap::new(t.clone(), 0.25).unwrap();
        let x = Point::scalar(0.9);
        let r = a.residual(&x).unwrap();
        assert!((r - 0.25 * t.residual(&x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn reduced_check_agrees_with_enriched() {
        let t = MapDescriptor::gallery("ex2-piecewise").unwrap();
        let p = EnrichedAlmostParams::new(1.0, 1.0, 3.0).unwrap();
        assert_eq!(canonical_lambda(&p), 0.5);
        assert_eq!(reduced_delta(&p), 0.5);
        let rep = reduced_condition_check(&t, &p, &SamplingPlan::grid(1e-2)).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified);
    }
}
