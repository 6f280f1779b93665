//! Built-in suites reproducing the worked examples end to end.
//!
//! Every suite is one task whose checks carry a pass/fail status. Sampling
//! is grid based or seeded, so two runs with the same seed write identical
//! artifacts.

use fpkit_core::contract::{
    check_almost, check_enriched_almost, check_uniqueness_condition, from_bianchini, search_params,
    BianchiniParams, CertificationReport, EnrichedAlmostParams, ParamGrid, SamplingPlan,
    UniquenessParams,
};
use fpkit_core::iterate::{
    canonical_lambda, check_bounds, krasnoselskij, picard, rate_check, reduced_condition_check,
    reduced_delta, run, IterationConfig, IterationTrace, Status, StopMode, StoppingRule,
};
use fpkit_core::space::Domain;
use fpkit_core::vip::{solve_vip, VipProblem};
use fpkit_core::{ConvexSet, MapDescriptor, Point, TAU_FIX};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::report::Task;
use crate::table::{emit_convergence_table, rows, TableFormat};

pub const SUITES: &[&str] = &[
    "gallery",
    "piecewise-certification",
    "identity-map",
    "class-conversions",
    "piecewise-iteration",
    "error-bounds",
    "vip-interval",
];

pub const DEFAULT_SEED: u64 = 7;

/// Random pairs added to the certification plans on top of the grid.
const RANDOM_PAIRS: usize = 20_000;

pub fn run_suite(name: &str, seed: u64, fmt: TableFormat) -> Task {
    Task::guarded(name, |t| {
        let summary = match name {
            "gallery" => gallery(t)?,
            "piecewise-certification" => piecewise_certification(t, seed)?,
            "identity-map" => identity_map(t, seed)?,
            "class-conversions" => class_conversions(t)?,
            "piecewise-iteration" => piecewise_iteration(t, fmt)?,
            "error-bounds" => error_bounds(t, fmt)?,
            "vip-interval" => vip_interval(t, fmt)?,
            other => {
                return Err(CliError::config(
                    "reproduce.suites",
                    format!("unknown suite {other:?}"),
                ))
            }
        };
        t.artifact(
            format!("{name}.json"),
            serde_json::to_string_pretty(
                &json!({ "suite": name, "summary": summary, "checks": t.report.checks }),
            )
            .expect("finite values")
                + "\n",
        );
        t.result(summary);
        Ok(())
    })
}

fn ex2() -> Result<MapDescriptor> {
    Ok(MapDescriptor::gallery("ex2-piecewise")?)
}

fn rule() -> StoppingRule {
    StoppingRule::new(1e-12, 10_000, StopMode::Residual).expect("valid rule")
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn verdict(rep: &CertificationReport) -> Value {
    json!({ "verdict": rep.verdict, "margin": rep.margin, "samples": rep.samples_used })
}

fn gallery(t: &mut Task) -> Result<Value> {
    let m = ex2()?;
    for (x, want) in [(0.2, 0.8), (1.2, 0.8)] {
        let got = m.evaluate(&Point::scalar(x))?.x();
        t.check(
            format!("T({x}) = {want}"),
            close(got, want, 1e-15),
            format!("got {got}"),
        );
    }
    for x in [0.5, 1.0] {
        let r = m.residual(&Point::scalar(x))?;
        t.check(
            format!("{x} is a fixed point"),
            r == 0.0,
            format!("residual {r}"),
        );
    }
    let d = Point::scalar(7.0 / 15.0).distance(&Point::scalar(8.0 / 15.0))?;
    t.check(
        "distance(7/15, 8/15) = 1/15",
        close(d, 1.0 / 15.0, 1e-15),
        format!("got {d}"),
    );
    Ok(json!({ "fixed_points": [0.5, 1.0] }))
}

fn piecewise_certification(t: &mut Task, seed: u64) -> Result<Value> {
    let m = ex2()?;
    let fine = SamplingPlan::grid(1e-3).with_random(RANDOM_PAIRS, seed);
    let p = EnrichedAlmostParams::new(1.0, 1.0, 3.0)?;
    let direct = check_enriched_almost(&m, p, &fine)?;
    t.check(
        "(1, 1, 3) certified on a 1e-3 grid",
        direct.is_certified(),
        format!("margin {}", direct.margin),
    );
    let reduced = reduced_condition_check(&m, &p, &fine)?;
    t.check(
        "averaged map satisfies the reduced condition for (1, 1, 3)",
        reduced.is_certified(),
        format!("margin {}", reduced.margin),
    );

    let anchored = SamplingPlan::grid(1e-2)
        .with_anchors([Point::scalar(7.0 / 15.0), Point::scalar(8.0 / 15.0)]);
    let mut falsified = 0;
    let mut near = 0;
    let mut total = 0;
    for i in 1..=9 {
        for l in 0..=10 {
            let rep = check_almost(&m, i as f64 / 10.0, l as f64, &anchored)?;
            total += 1;
            falsified += rep.is_falsified() as usize;
            near += rep
                .witnesses()
                .any(|(x, y)| close(x.x(), 7.0 / 15.0, 1e-2) && close(y.x(), 8.0 / 15.0, 1e-2))
                as usize;
        }
    }
    t.check(
        "not an almost contraction for any (delta, L) on the grid",
        falsified == total,
        format!("{falsified}/{total} falsified"),
    );
    t.check(
        "witness near (7/15, 8/15) for every (delta, L)",
        near == total,
        format!("{near}/{total} with a nearby witness"),
    );

    let coarse = SamplingPlan::grid(1e-2);
    let grid = ParamGrid::new(
        vec![0.0, 1.0, 2.0],
        vec![0.5, 1.0, 1.5],
        vec![0.0, 1.5, 3.0],
    )?;
    let found = search_params(&m, &coarse, &grid)?;
    let has = |b: f64, th: f64, l: f64| {
        found
            .iter()
            .any(|(p, _)| p.b() == b && p.theta() == th && p.l() == l)
    };
    t.check(
        "search finds (1, theta, 3) for theta in {0.5, 1, 1.5}",
        has(1.0, 0.5, 3.0) && has(1.0, 1.0, 3.0) && has(1.0, 1.5, 3.0),
        format!("{} triples certified", found.len()),
    );
    t.check(
        "search finds no triple with b = 0",
        found.iter().all(|(p, _)| p.b() != 0.0),
        String::new(),
    );
    let small_l = ParamGrid::new(vec![1.0], vec![0.5, 1.0, 1.5], vec![0.0, 1.0])?;
    let none = search_params(&m, &coarse, &small_l)?;
    t.check(
        "b = 1 needs L above 1",
        none.is_empty(),
        format!("{} certified", none.len()),
    );

    let both = SamplingPlan::grid(1e-2).with_anchors([Point::scalar(0.5), Point::scalar(1.0)]);
    let mut unique_falsified = 0;
    let mut unique_total = 0;
    for d in [0.1, 0.5, 0.9] {
        for l in [0.0, 1.0, 10.0] {
            let rep = check_uniqueness_condition(&m, UniquenessParams::new(d, l)?, &both)?;
            unique_total += 1;
            unique_falsified += rep.is_falsified() as usize;
        }
    }
    t.check(
        "uniqueness condition fails with two fixed points",
        unique_falsified == unique_total,
        format!("{unique_falsified}/{unique_total} falsified"),
    );

    Ok(json!({
        "certified": verdict(&direct),
        "reduced": verdict(&reduced),
        "search": found.iter().map(|(p, _)| json!([p.b(), p.theta(), p.l()])).collect::<Vec<_>>(),
    }))
}

fn identity_map(t: &mut Task, seed: u64) -> Result<Value> {
    let id = MapDescriptor::gallery("identity-01")?;
    let plan = SamplingPlan::grid(1e-2).with_random(RANDOM_PAIRS, seed);
    let e = check_enriched_almost(&id, EnrichedAlmostParams::new(0.0, 0.5, 1.0)?, &plan)?;
    t.check(
        "(0, 0.5, 1) certified",
        e.is_certified(),
        format!("margin {}", e.margin),
    );
    let a = check_almost(&id, 0.9, 0.1, &plan)?;
    t.check(
        "almost contraction with delta 0.9, L 0.1",
        a.is_certified(),
        format!("margin {}", a.margin),
    );
    let r = reduced_condition_check(&id, &EnrichedAlmostParams::new(0.0, 0.5, 1.0)?, &plan)?;
    t.check(
        "reduced condition certified",
        r.is_certified(),
        format!("margin {}", r.margin),
    );
    Ok(json!({ "enriched": verdict(&e), "almost": verdict(&a), "reduced": verdict(&r) }))
}

fn class_conversions(t: &mut Task) -> Result<Value> {
    let p = from_bianchini(BianchiniParams::new(1.0, 0.5)?);
    t.check(
        "Bianchini (1, 0.5) gives (1, 0.5, 1)",
        p.b() == 1.0 && p.theta() == 0.5 && p.l() == 1.0,
        format!("got ({}, {}, {})", p.b(), p.theta(), p.l()),
    );
    Ok(json!({ "bianchini": [p.b(), p.theta(), p.l()] }))
}

fn closed_form_error(tr: &IterationTrace, lambda: f64, y0: f64) -> f64 {
    tr.iterates
        .iter()
        .enumerate()
        .map(|(n, x)| (x.x() - (0.5 + (1.0 - 2.0 * lambda).powi(n as i32) * (y0 - 0.5))).abs())
        .fold(0.0, f64::max)
}

fn limit_is(tr: &IterationTrace, want: f64) -> bool {
    tr.status == Status::Converged && tr.limit.as_ref().is_some_and(|l| close(l.x(), want, 1e-9))
}

fn piecewise_iteration(t: &mut Task, fmt: TableFormat) -> Result<Value> {
    let m = ex2()?;
    let cyc = picard(&m, &Point::scalar(0.2), &rule())?;
    let mut vals: Vec<f64> = cyc.cycle.iter().flatten().map(|p| p.x()).collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup_by(|a, b| close(*a, *b, 1e-12));
    t.check(
        "Picard from 0.2 cycles through {0.8, 1.2}",
        cyc.status == Status::CycleDetected
            && vals.len() == 2
            && close(vals[0], 0.8, 1e-12)
            && close(vals[1], 1.2, 1e-12),
        format!("status {:?}, values {vals:?}", cyc.status),
    );
    t.artifact("picard-0.2.trace.csv", cyc.to_csv()?);

    let fixed = picard(&m, &Point::scalar(0.5), &rule())?;
    t.check(
        "Picard from 0.5 converges in 0 steps",
        limit_is(&fixed, 0.5) && fixed.steps() == 0,
        format!("status {:?}, steps {}", fixed.status, fixed.steps()),
    );

    let half = krasnoselskij(&m, 0.5, &Point::scalar(0.0), &rule())?;
    t.check(
        "lambda 1/2 from 0 reaches 1/2 in one step",
        limit_is(&half, 0.5) && half.steps() == 1,
        format!("status {:?}, steps {}", half.status, half.steps()),
    );

    let quarter = krasnoselskij(&m, 0.25, &Point::scalar(0.0), &rule())?;
    let err = closed_form_error(&quarter, 0.25, 0.0);
    t.check(
        "lambda 1/4 from 0 follows 1/2 - (1/2)^(n+1)",
        limit_is(&quarter, 0.5) && err <= 1e-12,
        format!(
            "max deviation {err:e} over {} iterates",
            quarter.iterates.len()
        ),
    );
    t.artifact("krasnoselskij-0.25-0.trace.csv", quarter.to_csv()?);
    t.artifact(
        format!("krasnoselskij-0.25-0.table.{}", fmt.extension()),
        emit_convergence_table(&quarter, fmt)?,
    );

    let upper = krasnoselskij(&m, 0.25, &Point::scalar(4.0 / 3.0), &rule())?;
    t.check(
        "lambda 1/4 from 4/3 converges to 1",
        limit_is(&upper, 1.0),
        format!("status {:?}, limit {:?}", upper.status, upper.limit),
    );

    let p = EnrichedAlmostParams::new(1.0, 1.0, 3.0)?;
    let lam = canonical_lambda(&p);
    let del = reduced_delta(&p);
    t.check(
        "canonical lambda for b = 1 is 1/2",
        lam == 0.5,
        format!("got {lam}"),
    );
    t.check(
        "reduced delta for (1, 1) is 1/2",
        del == 0.5,
        format!("got {del}"),
    );

    Ok(json!({
        "cycle": vals,
        "quarter_steps": quarter.steps(),
        "upper_limit": upper.limit,
    }))
}

fn error_bounds(t: &mut Task, fmt: TableFormat) -> Result<Value> {
    let m = ex2()?;
    let quarter = krasnoselskij(&m, 0.25, &Point::scalar(0.0), &rule())?;
    let star = Point::scalar(0.5);
    let rr = rate_check(&quarter, Some(&star), 0.5)?;
    t.check(
        "lambda 1/4 trace contracts at rate 1/2",
        rr.passed(),
        format!("max error ratio {:?}", rr.max_error_ratio),
    );
    let ratios: Vec<f64> = rows(&quarter)?
        .iter()
        .filter_map(|r| r.rate_ratio)
        .collect();
    let off = ratios
        .iter()
        .take(25)
        .map(|r| (r - 0.5).abs())
        .fold(0.0, f64::max);
    t.check(
        "rate-ratio column is 1/2",
        ratios.len() >= 25 && off < 1e-6,
        format!("max deviation {off:e} over the first 25 ratios"),
    );

    let cfg = IterationConfig::new(rule()).with_delta(0.5);
    let mut traces = Vec::new();
    for y0 in [0.0, 0.2, 0.6, 2.0 / 3.0, 1.0, 1.3, 4.0 / 3.0] {
        let tr = run(&m, 0.5, &Point::scalar(y0), &cfg)?;
        let bc = check_bounds(&tr, None, 0.5, TAU_FIX)?;
        let rc = rate_check(&tr, None, 0.5)?;
        t.check(
            format!("bounds hold for lambda 1/2 from {y0}"),
            tr.converged() && bc.passed() && rc.passed(),
            format!("status {:?}, worst excess {:e}", tr.status, bc.worst_excess),
        );
        traces.push(json!({ "y0": y0, "limit": tr.limit, "steps": tr.steps() }));
    }
    let tr = run(
        &m,
        0.25,
        &Point::scalar(0.0),
        &IterationConfig::new(rule()).with_delta(0.5),
    )?;
    t.artifact(
        format!("bounds-0.25-0.table.{}", fmt.extension()),
        emit_convergence_table(&tr, fmt)?,
    );
    Ok(json!({ "runs": traces }))
}

/// All VIP solutions of `G(x) = 2x − 2` on `C` found by scanning C on the
/// decimal lattice at resolution 1e-4. In one dimension the inequality only
/// needs testing at the endpoints of C.
fn brute_force_vip(lo: f64, hi: f64) -> Vec<f64> {
    let g = |x: f64| 2.0 * x - 2.0;
    let first = (lo * 1e4).ceil() as i64;
    let last = (hi * 1e4).floor() as i64;
    (first..=last)
        .map(|i| i as f64 / 1e4)
        .filter(|&z| g(z) * (lo - z) >= -1e-7 && g(z) * (hi - z) >= -1e-7)
        .collect()
}

fn vip_interval(t: &mut Task, fmt: TableFormat) -> Result<Value> {
    let (lo, hi) = (2.0 / 3.0, 4.0 / 3.0);
    let g = MapDescriptor::affine(vec![vec![2.0]], vec![-2.0], Domain::Whole { dim: 1 })?;
    let problem = VipProblem::new(g, ConvexSet::interval(lo, hi)?, 1.0)?;
    let cfg = IterationConfig::new(rule());
    let mut limits = Vec::new();
    for x0 in [2.0 / 3.0, 1.3] {
        let out = solve_vip(&problem, 0.5, &Point::scalar(x0), &cfg)?;
        let x = out.solution().map(|p| p.x());
        t.check(
            format!("solver from {x0} converges to 1"),
            out.solved() && x.is_some_and(|x| close(x, 1.0, 1e-9)),
            format!("status {:?}, limit {x:?}", out.trace.status),
        );
        if let Some(c) = &out.check {
            t.check(
                format!("limit from {x0} satisfies the fixed-point identity and inequality"),
                c.fixed_point_gap <= 1e-12 && c.min_inner >= -1e-7,
                format!("gap {:e}, min inner {:e}", c.fixed_point_gap, c.min_inner),
            );
        }
        t.artifact(
            format!("vip-{x0}.table.{}", fmt.extension()),
            emit_convergence_table(&out.trace, fmt)?,
        );
        limits.push(x);
    }
    let oracle = brute_force_vip(lo, hi);
    t.check(
        "grid scan finds 1 as the only solution",
        oracle == [1.0],
        format!("{oracle:?}"),
    );
    Ok(json!({ "limits": limits, "oracle": oracle }))
}
