use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopMode {
    /// A posteriori bound when a contraction factor is known, residual otherwise.
    #[default]
    Auto,
    /// `‖x_n − T x_n‖ ≤ tol`
    Residual,
    /// `δ/(1−δ)·‖x_{n−1} − x_n‖ ≤ tol`
    AposterioriBound,
    /// `‖x_{n−1} − x_n‖ ≤ tol`
    StepNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingRule {
    pub tol: f64,
    pub max_iter: usize,
    #[serde(default)]
    pub mode: StopMode,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            tol: 1e-12,
            max_iter: 10_000,
            mode: StopMode::Auto,
        }
    }
}

impl StoppingRule {
    pub fn new(tol: f64, max_iter: usize, mode: StopMode) -> Result<Self> {
        let r = StoppingRule {
            tol,
            max_iter,
            mode,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::config(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxIter,
    CycleDetected,
    DomainExit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum History {
    /// Keep every iterate.
    #[default]
    Full,
    /// Keep only the first and the last iterate; diagnostics stay complete.
    Thin,
}

/// The a priori and a posteriori error bounds at one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    /// `δⁿ/(1−δ)·‖x_0 − x_1‖`
    pub apriori: f64,
    /// `δ/(1−δ)·‖x_{n−1} − x_n‖`; absent at `n = 0`.
    pub aposteriori: Option<f64>,
}

/// Record of one Picard or Krasnoselskij run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// `x_0, x_1, …` (only first and last when `history` is thin).
    pub iterates: Vec<Point>,
    /// `‖x_n − x_{n+1}‖`
    pub step_norms: Vec<f64>,
    /// `‖x_n − T x_n‖` for the base map `T`, one per iterate.
    pub residuals: Vec<f64>,
    pub status: Status,
    pub limit: Option<Point>,
    pub lambda: f64,
    /// Contraction factor of the iterated operator, when known.
    pub delta: Option<f64>,
    pub bounds: Option<Vec<BoundRow>>,
    /// The repeating segment when `status` is `cycle-detected`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<Point>>,
    /// The image that left the domain when `status` is `domain-exit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_point: Option<Point>,
    pub history: History,
}

impl IterationTrace {
    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.step_norms.len()
    }

    pub fn last(&self) -> &Point {
        self.iterates.last().expect("a trace always holds x_0")
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("a trace always holds x_0")
    }

    pub(crate) fn require_full(&self) -> Result<()> {
        if self.history == History::Thin {
            Err(Error::config(
                "operation needs a trace with full iterate history",
            ))
        } else {
            Ok(())
        }
    }

    /// CSV with columns `n, x0…x{d−1}, step_norm, residual, apriori, aposteriori`.
    /// Missing values are left empty.
    pub fn to_csv(&self) -> Result<String> {
        self.require_full()?;
        let dim = self.iterates[0].dim();
        let mut out = String::from("n");
        for d in 0..dim {
            write!(out, ",x{d}").unwrap();
        }
        out.push_str(",step_norm,residual,apriori,aposteriori\n");
        for (n, x) in self.iterates.iter().enumerate() {
            write!(out, "{n}").unwrap();
            for c in x.coords() {
                write!(out, ",{c}").unwrap();
            }
            out.push(',');
            if let Some(s) = self.step_norms.get(n) {
                write!(out, "{s}").unwrap();
            }
            write!(out, ",{}", self.residuals[n]).unwrap();
            out.push(',');
            if let Some(b) = self.bounds.as_ref().and_then(|b| b.get(n)) {
                write!(out, "{}", b.apriori).unwrap();
                out.push(',');
                if let Some(a) = b.aposteriori {
                    write!(out, "{a}").unwrap();
                }
            } else {
                out.push(',');
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace values are finite")
    }
}
