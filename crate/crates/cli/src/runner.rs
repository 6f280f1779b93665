//! Executes an [`ExperimentConfig`] into a report plus artifacts.

use std::time::Instant;

use fpkit_core::contract::{search_params, Certifier, Condition, SamplingPlan, Verdict};
use fpkit_core::iterate::{
    check_bounds, rate_check, reduced_condition_check, run as iterate_run, History,
    IterationConfig, IterationTrace,
};
use fpkit_core::vip::{solve_vip, vip_operator};
use fpkit_core::{MapDescriptor, Point, TAU_FIX};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, Method};
use crate::error::{CliError, Result};
use crate::report::{Artifact, RunOutput, RunReport, Task};
use crate::reproduce;
use crate::table::{emit_convergence_table, render, TableFormat};

/// Run a validated config. Task failures are recorded in the report; only
/// configuration problems return an error.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let fmt = cfg.output.format;
    let tasks = match cfg.kind {
        ExperimentKind::Certify => certify(cfg)?,
        ExperimentKind::Search => vec![search(cfg)?],
        ExperimentKind::Iterate => iterate(cfg, fmt)?,
        ExperimentKind::Sweep => vec![sweep(cfg, fmt)?],
        ExperimentKind::Vip => vip(cfg, fmt)?,
        ExperimentKind::ReproducePaper => {
            let names: Vec<String> = match &cfg.reproduce {
                Some(r) if !r.suites.is_empty() => r.suites.clone(),
                _ => reproduce::SUITES.iter().map(|s| s.to_string()).collect(),
            };
            let seed = cfg.seed.unwrap_or(reproduce::DEFAULT_SEED);
            names
                .par_iter()
                .map(|n| reproduce::run_suite(n, seed, fmt))
                .collect()
        }
    };
    let mut artifacts: Vec<Artifact> = Vec::new();
    let mut reports = Vec::with_capacity(tasks.len());
    for t in tasks {
        artifacts.extend(t.artifacts);
        reports.push(t.report);
    }
    let mut report = RunReport::new(cfg, reports);
    if cfg.output.timing {
        report.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(RunOutput { report, artifacts })
}

fn map_of(cfg: &ExperimentConfig) -> Result<MapDescriptor> {
    cfg.map
        .as_ref()
        .ok_or_else(|| CliError::config("map", "missing"))?
        .build("map")
}

fn plan_of(cfg: &ExperimentConfig) -> Result<SamplingPlan> {
    cfg.sampling_plan()
        .ok_or_else(|| CliError::config("sampling", "missing"))
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Certified => "certified",
        Verdict::Falsified => "falsified",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn certify(cfg: &ExperimentConfig) -> Result<Vec<Task>> {
    let map = map_of(cfg)?;
    let plan = plan_of(cfg)?;
    let cert = Certifier::new(&map, &plan).map_err(CliError::at("sampling"))?;
    Ok(cfg
        .conditions
        .iter()
        .enumerate()
        .map(|(i, cond)| {
            Task::guarded(format!("condition-{i}"), |t| {
                let rep = cert.check(&cond.condition)?;
                if let Some(want) = cond.expect {
                    t.check(
                        "expected-verdict",
                        rep.verdict == want,
                        format!(
                            "expected {}, got {}",
                            verdict_name(want),
                            verdict_name(rep.verdict)
                        ),
                    );
                }
                let mut result = json!({ "report": rep });
                if cond.reduced {
                    let Condition::EnrichedAlmost(p) = &cond.condition else {
                        return Err(CliError::config(
                            format!("conditions[{i}].reduced"),
                            "only applies to enriched-almost conditions",
                        ));
                    };
                    let red = reduced_condition_check(&map, p, &plan)?;
                    t.check(
                        "reduced-agrees",
                        red.verdict == rep.verdict,
                        format!(
                            "direct {}, reduced {}",
                            verdict_name(rep.verdict),
                            verdict_name(red.verdict)
                        ),
                    );
                    result["reduced"] = serde_json::to_value(&red).expect("serializable");
                }
                t.artifact(
                    format!("certify-{i}.json"),
                    serde_json::to_string_pretty(&result).expect("serializable") + "\n",
                );
                t.result(result);
                Ok(())
            })
        })
        .collect())
}

fn search(cfg: &ExperimentConfig) -> Result<Task> {
    let map = map_of(cfg)?;
    let plan = plan_of(cfg)?;
    let grid = cfg
        .grid
        .clone()
        .ok_or_else(|| CliError::config("grid", "missing"))?;
    let fmt = cfg.output.format;
    Ok(Task::guarded("search", |t| {
        let found = search_params(&map, &plan, &grid)?;
        let rows: Vec<Vec<Value>> = found
            .iter()
            .map(|(p, r)| {
                vec![
                    json!(p.b()),
                    json!(p.theta()),
                    json!(p.l()),
                    json!(p.delta()),
                    json!(r.margin),
                    json!(r.samples_used),
                ]
            })
            .collect();
        t.artifact(
            format!("search.{}", fmt.extension()),
            render(
                &["b", "theta", "L", "delta", "margin", "samples"],
                &rows,
                fmt,
            ),
        );
        t.result(json!({
            "certified": found.iter().map(|(p, r)| json!({"params": p, "delta": p.delta(), "margin": r.margin})).collect::<Vec<_>>(),
        }));
        Ok(())
    }))
}

/// Summary of a trace for reports.
fn summary(tr: &IterationTrace, x0: &Point) -> Value {
    json!({
        "x0": x0,
        "lambda": tr.lambda,
        "status": tr.status,
        "steps": tr.steps(),
        "limit": tr.limit,
        "final_residual": tr.final_residual(),
        "cycle": tr.cycle,
        "exit_point": tr.exit_point,
    })
}

fn trace_artifacts(
    t: &mut Task,
    prefix: &str,
    tr: &IterationTrace,
    fmt: TableFormat,
) -> Result<()> {
    if tr.history == History::Full {
        t.artifact(format!("{prefix}.trace.csv"), tr.to_csv()?);
        t.artifact(
            format!("{prefix}.table.{}", fmt.extension()),
            emit_convergence_table(tr, fmt)?,
        );
    }
    Ok(())
}

fn bound_checks(t: &mut Task, tr: &IterationTrace, delta: f64) -> Result<()> {
    if !tr.converged() || tr.history != History::Full {
        return Ok(());
    }
    let bc = check_bounds(tr, None, delta, TAU_FIX)?;
    t.check(
        "error-bounds",
        bc.passed(),
        format!(
            "a priori {:?}, a posteriori {:?}, merged {:?}",
            bc.apriori_violation, bc.aposteriori_violation, bc.merged_violation
        ),
    );
    let rr = rate_check(tr, None, delta)?;
    t.check(
        "rate",
        rr.passed(),
        format!("max step ratio {:?} vs delta {delta}", rr.max_step_ratio),
    );
    Ok(())
}

fn iterate(cfg: &ExperimentConfig, fmt: TableFormat) -> Result<Vec<Task>> {
    let map = map_of(cfg)?;
    let it = cfg
        .iteration
        .as_ref()
        .ok_or_else(|| CliError::config("iteration", "missing"))?;
    let lambda = match it.method {
        Method::Picard => 1.0,
        Method::Krasnoselskij => it
            .lambda
            .or(it.params.map(|p| p.lambda()))
            .ok_or_else(|| CliError::config("iteration.lambda", "missing"))?,
    };
    // δ from params only describes the averaged map at the canonical λ.
    let delta = it.delta.or_else(|| {
        it.params
            .filter(|p| (p.lambda() - lambda).abs() <= f64::EPSILON)
            .map(|p| p.delta())
    });
    let mut ic = IterationConfig::new(it.rule);
    ic.delta = delta;
    ic.history = it.history;
    ic.validate().map_err(CliError::at("iteration"))?;

    Ok(it
        .starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            Task::guarded(format!("start-{i}"), |t| {
                let tr = iterate_run(&map, lambda, x0, &ic)?;
                if let Some(want) = &it.expect_limit {
                    let got = tr.limit.as_ref().map(|l| l.distance(want)).transpose()?;
                    t.check(
                        "expected-limit",
                        got.is_some_and(|d| d <= it.expect_tol),
                        format!("status {:?}, distance {got:?}", tr.status),
                    );
                }
                if let Some(d) = delta {
                    bound_checks(t, &tr, d)?;
                }
                trace_artifacts(t, &format!("start-{i}"), &tr, fmt)?;
                t.result(summary(&tr, x0));
                Ok(())
            })
        })
        .collect())
}

fn sweep(cfg: &ExperimentConfig, fmt: TableFormat) -> Result<Task> {
    let map = map_of(cfg)?;
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::config("sweep", "missing"))?;
    Ok(Task::guarded("sweep", |t| {
        let jobs: Vec<(f64, &Point)> = sw
            .lambdas
            .iter()
            .flat_map(|&l| sw.starts.iter().map(move |x| (l, x)))
            .collect();
        let ic = IterationConfig::new(sw.rule).thin();
        let traces = jobs
            .par_iter()
            .map(|(l, x0)| iterate_run(&map, *l, x0, &ic))
            .collect::<fpkit_core::Result<Vec<_>>>()?;
        let rows: Vec<Vec<Value>> = jobs
            .iter()
            .zip(&traces)
            .map(|((l, x0), tr)| {
                vec![
                    json!(l),
                    json!(x0),
                    json!(tr.status),
                    json!(tr.steps()),
                    json!(tr.limit),
                    json!(tr.final_residual()),
                ]
            })
            .collect();
        t.artifact(
            format!("sweep.{}", fmt.extension()),
            render(
                &["lambda", "x0", "status", "steps", "limit", "residual"],
                &rows,
                fmt,
            ),
        );
        t.result(
            jobs.iter()
                .zip(&traces)
                .map(|((_, x0), tr)| summary(tr, x0))
                .collect::<Vec<_>>(),
        );
        Ok(())
    }))
}

fn vip(cfg: &ExperimentConfig, fmt: TableFormat) -> Result<Vec<Task>> {
    let v = cfg
        .vip
        .as_ref()
        .ok_or_else(|| CliError::config("vip", "missing"))?;
    let problem = v.problem()?;
    let mut tasks = Vec::new();

    let lambda = match (v.lambda, v.params) {
        (Some(l), _) => l,
        (None, Some(p)) => {
            // The composite must certify before its canonical λ is used.
            let op = vip_operator(&problem)?;
            let plan = cfg
                .sampling_plan()
                .unwrap_or_else(|| SamplingPlan::grid(1e-3));
            let mut certified = false;
            tasks.push(Task::guarded("certify-operator", |t| {
                let rep = Certifier::new(&op, &plan)?.check(&Condition::EnrichedAlmost(p))?;
                certified = t.check(
                    "operator-certified",
                    rep.is_certified(),
                    format!(
                        "verdict {}, margin {}",
                        verdict_name(rep.verdict),
                        rep.margin
                    ),
                );
                t.result(&rep);
                Ok(())
            }));
            if !certified {
                return Ok(tasks);
            }
            p.lambda()
        }
        (None, None) => return Err(CliError::config("vip.lambda", "missing")),
    };
    let mut ic = IterationConfig::new(v.rule);
    ic.validate().map_err(CliError::at("vip.rule"))?;
    ic.history = History::Full;

    tasks.extend(v.starts.iter().enumerate().map(|(i, x0)| {
        Task::guarded(format!("start-{i}"), |t| {
            let out = solve_vip(&problem, lambda, x0, &ic)?;
            t.check(
                "vip-solved",
                out.solved(),
                format!("status {:?}, check {:?}", out.trace.status, out.check),
            );
            if let Some(want) = &v.expect_solution {
                let d = out.solution().map(|s| s.distance(want)).transpose()?;
                t.check(
                    "expected-solution",
                    d.is_some_and(|d| d <= 1e-9),
                    format!("distance {d:?}"),
                );
            }
            trace_artifacts(t, &format!("start-{i}"), &out.trace, fmt)?;
            t.result(json!({ "summary": summary(&out.trace, x0), "check": out.check }));
            Ok(())
        })
    }));
    Ok(tasks)
}
