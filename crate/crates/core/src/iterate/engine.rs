use serde::{Deserialize, Serialize};

use super::trace::{BoundRow, History, IterationTrace, Status, StopMode, StoppingRule};
use crate::error::{Error, Result};
use crate::space::{dist_slices, MapDescriptor, Point};
use crate::{TAU_CYCLE, TAU_FIX};

/// Default number of past iterates inspected for an exact cycle.
pub const CYCLE_WINDOW: usize = 64;

/// A repeating segment counts as a cycle only if its diameter exceeds the
/// repeat gap by this factor.
const CYCLE_SEPARATION: f64 = 1e3;

/// `T_λ = (1−λ)·I + λ·T` for a base map `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedMap {
    base: MapDescriptor,
    lambda: f64,
}

impl AveragedMap {
    pub fn new(base: MapDescriptor, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(AveragedMap { base, lambda })
    }

    pub fn base(&self) -> &MapDescriptor {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn evaluate(&self, x: &Point) -> Result<Point> {
        let x = self.base.domain().admit(x)?;
        let tx = self.base.evaluate(&x)?;
        x.lerp(&tx, self.lambda)
    }

    /// `‖x − T_λ x‖`, which equals `λ·‖x − T x‖`.
    pub fn residual(&self, x: &Point) -> Result<f64> {
        let tlx = self.evaluate(x)?;
        let x = self.base.domain().admit(x)?;
        x.distance(&tlx)
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )))
    }
}

/// Everything about a run besides the map, the start point and `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationConfig {
    #[serde(default)]
    pub rule: StoppingRule,
    /// Known contraction factor of the iterated operator; enables the error bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_tau_fix")]
    pub tau_fix: f64,
    #[serde(default = "default_window")]
    pub cycle_window: usize,
    #[serde(default = "default_tau_cycle")]
    pub tau_cycle: f64,
    #[serde(default)]
    pub history: History,
}

fn default_tau_fix() -> f64 {
    TAU_FIX
}
fn default_window() -> usize {
    CYCLE_WINDOW
}
fn default_tau_cycle() -> f64 {
    TAU_CYCLE
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig::new(StoppingRule::default())
    }
}

impl IterationConfig {
    pub fn new(rule: StoppingRule) -> Self {
        IterationConfig {
            rule,
            delta: None,
            tau_fix: TAU_FIX,
            cycle_window: CYCLE_WINDOW,
            tau_cycle: TAU_CYCLE,
            history: History::Full,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn thin(mut self) -> Self {
        self.history = History::Thin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.rule.validate()?;
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::config(format!("delta must lie in (0, 1), got {d}")));
            }
        }
        if self.rule.mode == StopMode::AposterioriBound && self.delta.is_none() {
            return Err(Error::config(
                "the a posteriori stopping rule needs a known delta",
            ));
        }
        if !(self.tau_fix.is_finite() && self.tau_fix > 0.0) {
            return Err(Error::config("tau_fix must be > 0"));
        }
        if !(self.tau_cycle.is_finite() && self.tau_cycle >= 0.0) {
            return Err(Error::config("tau_cycle must be ≥ 0"));
        }
        Ok(())
    }

    fn mode(&self) -> StopMode {
        match self.rule.mode {
            StopMode::Auto if self.delta.is_some() => StopMode::AposterioriBound,
            StopMode::Auto => StopMode::Residual,
            m => m,
        }
    }
}

/// Picard iteration `x_{n+1} = T x_n`.
pub fn picard(map: &MapDescriptor, x0: &Point, rule: &StoppingRule) -> Result<IterationTrace> {
    run(map, 1.0, x0, &IterationConfig::new(*rule))
}

/// Krasnoselskij iteration `x_{n+1} = (1−λ)·x_n + λ·T x_n`.
pub fn krasnoselskij(
    map: &MapDescriptor,
    lambda: f64,
    x0: &Point,
    rule: &StoppingRule,
) -> Result<IterationTrace> {
    run(map, lambda, x0, &IterationConfig::new(*rule))
}

/// Krasnoselskij iteration with full control over tolerances, bounds and history.
///
/// A start point outside the domain is an error. Leaving the domain later ends
/// the run with [`Status::DomainExit`].
pub fn run(
    map: &MapDescriptor,
    lambda: f64,
    x0: &Point,
    cfg: &IterationConfig,
) -> Result<IterationTrace> {
    check_lambda(lambda)?;
    cfg.validate()?;
    let domain = map.domain();
    let mut x = domain.admit(x0)?;
    let dim = x.dim();
    let mode = cfg.mode();
    let full = cfg.history == History::Full;

    // Recent iterates for cycle detection, independent of the history mode.
    let window = cfg.cycle_window.max(1);
    let mut recent: std::collections::VecDeque<Point> = std::collections::VecDeque::new();

    let mut iterates = vec![x.clone()];
    let mut step_norms = Vec::new();
    let mut residuals = Vec::new();
    let mut tx = vec![0.0; dim];
    let mut exit_point = None;
    let mut cycle = None;
    let mut n = 0usize;

    let status = loop {
        let evaluated = match map.eval_into(x.coords(), &mut tx) {
            Ok(()) => tx.iter().all(|v| v.is_finite()),
            Err(e) if e.is_domain() => false,
            Err(e) => return Err(e),
        };
        if !evaluated {
            // T is undefined at x: step back so every kept iterate has a residual.
            let Some(prev) = recent.pop_back() else {
                return Err(Error::config("map cannot be evaluated at the start point"));
            };
            step_norms.pop();
            if full {
                iterates.pop();
            }
            exit_point = Some(std::mem::replace(&mut x, prev));
            n -= 1;
            break Status::DomainExit;
        }
        let res = dist_slices(x.coords(), &tx);
        residuals.push(res);

        let last_step = step_norms.last().copied();
        let rule_met = res == 0.0
            || match mode {
                StopMode::Residual | StopMode::Auto => res <= cfg.rule.tol,
                StopMode::StepNorm => last_step.is_some_and(|s| s <= cfg.rule.tol),
                StopMode::AposterioriBound => {
                    let d = cfg.delta.expect("validated");
                    last_step.is_some_and(|s| d / (1.0 - d) * s <= cfg.rule.tol)
                }
            };
        if rule_met && res <= cfg.tau_fix {
            break Status::Converged;
        }

        // Period p ≥ 2 means x_n ≈ x_{n−p}; the cycle is x_{n−p} … x_{n−1}. A
        // slowly converging tail also repeats to within the tolerance, so the
        // orbit must be much wider than the repeat gap.
        let found = recent.iter().rev().enumerate().skip(1).find_map(|(k, y)| {
            let gap = dist_slices(y.coords(), x.coords());
            if gap > cfg.tau_cycle {
                return None;
            }
            let p = k + 1;
            let diam = recent
                .iter()
                .skip(recent.len() - p)
                .map(|z| dist_slices(z.coords(), x.coords()))
                .fold(0.0f64, f64::max);
            (diam > cfg.tau_cycle && diam > CYCLE_SEPARATION * gap).then_some(p)
        });
        if let Some(p) = found {
            let start = recent.len() - p;
            cycle = Some(recent.iter().skip(start).cloned().collect());
            break Status::CycleDetected;
        }

        if n == cfg.rule.max_iter {
            break Status::MaxIter;
        }

        let next: Vec<f64> = if lambda == 1.0 {
            tx.clone()
        } else {
            x.coords()
                .iter()
                .zip(&tx)
                .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
                .collect()
        };
        if next.iter().any(|v| !v.is_finite()) {
            break Status::DomainExit;
        }
        let next = Point::from_raw(next);
        let next = match domain.admit(&next) {
            Ok(p) => p,
            Err(e) if e.is_domain() => {
                exit_point = Some(next);
                break Status::DomainExit;
            }
            Err(e) => return Err(e),
        };
        step_norms.push(x.distance(&next)?);

        recent.push_back(x);
        if recent.len() > window {
            recent.pop_front();
        }
        if full {
            iterates.push(next.clone());
        }
        x = next;
        n += 1;
    };

    if !full && n > 0 {
        iterates.push(x.clone());
    }
    let limit = (status == Status::Converged).then(|| x.clone());
    let bounds = cfg.delta.map(|d| {
        let d01 = step_norms.first().copied().unwrap_or(lambda * residuals[0]);
        (0..residuals.len())
            .map(|k| BoundRow {
                apriori: d.powi(k as i32) / (1.0 - d) * d01,
                aposteriori: k.checked_sub(1).map(|j| d / (1.0 - d) * step_norms[j]),
            })
            .collect()
    });

    Ok(IterationTrace {
        iterates,
        step_norms,
        residuals,
        status,
        limit,
        lambda,
        delta: cfg.delta,
        bounds,
        cycle,
        exit_point,
        history: cfg.history,
    })
}
