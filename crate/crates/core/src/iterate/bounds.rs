use serde::{Deserialize, Serialize};

use super::trace::IterationTrace;
use crate::error::{Error, Result};
use crate::space::Point;
use crate::TAU_FIX;

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!(
            "delta must lie in (0, 1), got {delta}"
        )))
    }
}

/// `δⁿ/(1−δ)·d(x_0, x_1)`
pub fn apriori_bound(delta: f64, d01: f64, n: usize) -> Result<f64> {
    check_delta(delta)?;
    Ok(delta.powf(n as f64) / (1.0 - delta) * d01)
}

/// `δ/(1−δ)·d(x_{n−1}, x_n)`
pub fn aposteriori_bound(delta: f64, d_prev: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(delta / (1.0 - delta) * d_prev)
}

/// Bound on `d(x_{n+i−1}, x*)` from the step `d(x_n, x_{n−1})`: `δ^i/(1−δ)·d_step`.
///
/// `i = 1` is the a posteriori bound; `n = 1` recovers the a priori one.
pub fn merged_bound(delta: f64, i: usize, d_step: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(delta.powf(i as f64) / (1.0 - delta) * d_step)
}

/// `δⁿ(1−δᵖ)/(1−δ)·d(x_0, x_1)`, a bound on `d(x_n, x_{n+p})`.
pub fn cauchy_bound(delta: f64, n: usize, p: usize, d01: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(delta.powf(n as f64) * (1.0 - delta.powf(p as f64)) / (1.0 - delta) * d01)
}

/// Result of comparing actual errors along a trace with the error estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub delta: f64,
    /// Iterates checked (all of them).
    pub checked: usize,
    /// First `n` with `d(x_n, x*) > apriori_n + tol`.
    pub apriori_violation: Option<usize>,
    /// First `n ≥ 1` with `d(x_n, x*) > aposteriori_n + tol`.
    pub aposteriori_violation: Option<usize>,
    /// First `(n, i)` violating the merged estimate.
    pub merged_violation: Option<(usize, usize)>,
    /// Largest `actual − bound` seen over both classical estimates.
    pub worst_excess: f64,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.apriori_violation.is_none()
            && self.aposteriori_violation.is_none()
            && self.merged_violation.is_none()
    }
}

fn limit_of<'a>(trace: &'a IterationTrace, limit: Option<&'a Point>) -> Result<&'a Point> {
    limit
        .or(trace.limit.as_ref())
        .ok_or_else(|| Error::config("no limit given and the trace did not converge"))
}

/// Check the a priori, a posteriori and merged estimates against the true
/// distances to `limit` (defaults to the trace's own limit), allowing `tol`.
pub fn check_bounds(
    trace: &IterationTrace,
    limit: Option<&Point>,
    delta: f64,
    tol: f64,
) -> Result<BoundCheck> {
    check_delta(delta)?;
    trace.require_full()?;
    let star = limit_of(trace, limit)?;
    let err: Vec<f64> = trace
        .iterates
        .iter()
        .map(|x| x.distance(star))
        .collect::<Result<_>>()?;
    let steps = &trace.step_norms;
    let d01 = steps.first().copied().unwrap_or(0.0);

    let mut out = BoundCheck {
        delta,
        checked: err.len(),
        apriori_violation: None,
        aposteriori_violation: None,
        merged_violation: None,
        worst_excess: f64::NEG_INFINITY,
    };
    for (n, &e) in err.iter().enumerate() {
        let a = apriori_bound(delta, d01, n)?;
        out.worst_excess = out.worst_excess.max(e - a);
        if e > a + tol && out.apriori_violation.is_none() {
            out.apriori_violation = Some(n);
        }
        if n >= 1 {
            let b = aposteriori_bound(delta, steps[n - 1])?;
            out.worst_excess = out.worst_excess.max(e - b);
            if e > b + tol && out.aposteriori_violation.is_none() {
                out.aposteriori_violation = Some(n);
            }
        }
    }
    'merged: for n in 1..err.len() {
        for i in 1..=(err.len() - n) {
            let m = merged_bound(delta, i, steps[n - 1])?;
            if err[n + i - 1] > m + tol {
                out.merged_violation = Some((n, i));
                break 'merged;
            }
        }
    }
    Ok(out)
}

/// Result of the linear rate check `d(x_n, x*) ≤ δ·d(x_{n−1}, x*) + τ` and the
/// step contraction `d(x_n, x_{n+1}) ≤ δ·d(x_{n−1}, x_n) + τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub delta: f64,
    pub tolerance: f64,
    pub first_violation: Option<usize>,
    pub first_step_violation: Option<usize>,
    /// Largest `d(x_n, x*)/d(x_{n−1}, x*)` over steps where the error exceeds the tolerance.
    pub max_error_ratio: Option<f64>,
    /// Largest `d(x_n, x_{n+1})/d(x_{n−1}, x_n)` over steps above the tolerance.
    pub max_step_ratio: Option<f64>,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none() && self.first_step_violation.is_none()
    }
}

/// Compare a trace with the linear convergence rate `δ`, with additive slack [`TAU_FIX`].
pub fn rate_check(trace: &IterationTrace, limit: Option<&Point>, delta: f64) -> Result<RateReport> {
    check_delta(delta)?;
    trace.require_full()?;
    let star = limit_of(trace, limit)?;
    let tau = TAU_FIX;
    let err: Vec<f64> = trace
        .iterates
        .iter()
        .map(|x| x.distance(star))
        .collect::<Result<_>>()?;
    let steps = &trace.step_norms;

    let mut rep = RateReport {
        delta,
        tolerance: tau,
        first_violation: None,
        first_step_violation: None,
        max_error_ratio: None,
        max_step_ratio: None,
    };
    fn bump(slot: &mut Option<f64>, v: f64) {
        *slot = Some(slot.map_or(v, |m| m.max(v)));
    }
    for n in 1..err.len() {
        if err[n] > delta * err[n - 1] + tau && rep.first_violation.is_none() {
            rep.first_violation = Some(n);
        }
        if err[n - 1] > tau {
            bump(&mut rep.max_error_ratio, err[n] / err[n - 1]);
        }
    }
    for n in 1..steps.len() {
        if steps[n] > delta * steps[n - 1] + tau && rep.first_step_violation.is_none() {
            rep.first_step_violation = Some(n);
        }
        if steps[n - 1] > tau {
            bump(&mut rep.max_step_ratio, steps[n] / steps[n - 1]);
        }
    }
    Ok(rep)
}
