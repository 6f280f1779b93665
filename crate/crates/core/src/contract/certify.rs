//! Sampled verification and falsification of contraction-type inequalities.
//!
//! A check evaluates `lhs ≤ rhs` on every sampled ordered pair `(x, y)` with
//! `x ≠ y`. Both orders are always used since most of these conditions are not
//! symmetric in `x` and `y`. The per-pair slack is `rhs − lhs` and the report's
//! margin is the minimum slack over all pairs.
//!
//! Verdicts, with `τ` = [`TAU_MARGIN`](crate::TAU_MARGIN):
//!
//! * `falsified`    – margin < −τ; the worst pair witnesses `lhs > rhs`.
//! * `inconclusive` – −τ ≤ margin < 0, i.e. a violation no larger than rounding noise.
//! * `certified`    – margin ≥ 0 on every sampled pair.
//!
//! Certification is empirical: it says nothing about unsampled pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{
    BianchiniParams, ChatterjeaParams, EnrichedAlmostParams, KannanParams, UniquenessParams,
};
use super::sampling::{build_samples, Samples, SamplingPlan};
use crate::error::{Error, Result};
use crate::space::{MapDescriptor, Point};
use crate::TAU_MARGIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    Falsified,
    Inconclusive,
}

/// A pairwise inequality a map can be checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "kebab-case")]
pub enum Condition {
    /// `‖b(x−y)+Tx−Ty‖ ≤ θ‖x−y‖ + L‖b(x−y)+Tx−y‖`
    EnrichedAlmost(EnrichedAlmostParams),
    /// `‖Tx−Ty‖ ≤ δ‖x−y‖ + L‖y−Tx‖`
    Almost {
        delta: f64,
        #[serde(rename = "L")]
        l: f64,
    },
    /// `‖Tx−Ty‖ ≤ δ₁‖x−y‖ + L₁‖x−Tx‖`
    Uniqueness(UniquenessParams),
    EnrichedKannan(KannanParams),
    EnrichedChatterjea(ChatterjeaParams),
    EnrichedBianchini(BianchiniParams),
    /// `⟨Tx−Ty, x−y⟩ ≥ 0`
    Monotone,
}

impl Condition {
    pub fn almost(delta: f64, l: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
            return Err(Error::config(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::config(format!("L must be ≥ 0, got {l}")));
        }
        Ok(Condition::Almost { delta, l })
    }

    /// `(lhs, rhs)` for the ordered pair; `tx = T(x)`, `ty = T(y)`.
    #[inline]
    fn sides(&self, x: &[f64], tx: &[f64], y: &[f64], ty: &[f64]) -> (f64, f64) {
        let d = norm_of(x.len(), |i| x[i] - y[i]);
        match self {
            Condition::EnrichedAlmost(p) => {
                let b = p.b();
                let lhs = norm_of(x.len(), |i| b * (x[i] - y[i]) + tx[i] - ty[i]);
                let slack = norm_of(x.len(), |i| b * (x[i] - y[i]) + tx[i] - y[i]);
                (lhs, p.theta() * d + p.l() * slack)
            }
            Condition::Almost { delta, l } => {
                let lhs = norm_of(x.len(), |i| tx[i] - ty[i]);
                let slack = norm_of(x.len(), |i| y[i] - tx[i]);
                (lhs, delta * d + l * slack)
            }
            Condition::Uniqueness(u) => {
                let lhs = norm_of(x.len(), |i| tx[i] - ty[i]);
                let slack = norm_of(x.len(), |i| x[i] - tx[i]);
                (lhs, u.delta1 * d + u.l1 * slack)
            }
            Condition::EnrichedKannan(p) => {
                let lhs = norm_of(x.len(), |i| p.k * (x[i] - y[i]) + tx[i] - ty[i]);
                let rx = norm_of(x.len(), |i| x[i] - tx[i]);
                let ry = norm_of(x.len(), |i| y[i] - ty[i]);
                (lhs, p.a * (rx + ry))
            }
            Condition::EnrichedChatterjea(p) => {
                let k1 = p.k + 1.0;
                let lhs = norm_of(x.len(), |i| p.k * (x[i] - y[i]) + tx[i] - ty[i]);
                let s1 = norm_of(x.len(), |i| k1 * (x[i] - y[i]) + y[i] - ty[i]);
                let s2 = norm_of(x.len(), |i| k1 * (y[i] - x[i]) + x[i] - tx[i]);
                (lhs, p.b * (s1 + s2))
            }
            Condition::EnrichedBianchini(p) => {
                let lhs = norm_of(x.len(), |i| p.k * (x[i] - y[i]) + tx[i] - ty[i]);
                let rx = norm_of(x.len(), |i| x[i] - tx[i]);
                let ry = norm_of(x.len(), |i| y[i] - ty[i]);
                (lhs, p.h * rx.max(ry))
            }
            Condition::Monotone => {
                let inner: f64 = (0..x.len()).map(|i| (tx[i] - ty[i]) * (x[i] - y[i])).sum();
                (-inner, 0.0)
            }
        }
    }

    /// How badly a pair violates the condition; larger is worse. Ratio
    /// `lhs/rhs` for norm inequalities, `−⟨Tx−Ty, x−y⟩/‖x−y‖²` for monotonicity.
    #[inline]
    fn score(&self, lhs: f64, rhs: f64, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Condition::Monotone => {
                let d2: f64 = (0..x.len()).map(|i| (x[i] - y[i]) * (x[i] - y[i])).sum();
                lhs / d2
            }
            _ => {
                if rhs > 0.0 {
                    lhs / rhs
                } else if lhs > rhs {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    /// The inequality evaluated on a concrete pair.
    pub fn evaluate_pair(
        &self,
        map: &MapDescriptor,
        x: &Point,
        y: &Point,
    ) -> Result<PairEvaluation> {
        let tx = map.evaluate(x)?;
        let ty = map.evaluate(y)?;
        let (lhs, rhs) = self.sides(x.coords(), tx.coords(), y.coords(), ty.coords());
        Ok(PairEvaluation { lhs, rhs })
    }
}

#[inline]
fn norm_of(dim: usize, f: impl Fn(usize) -> f64) -> f64 {
    if dim == 1 {
        f(0).abs()
    } else {
        (0..dim).map(|i| f(i) * f(i)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEvaluation {
    pub lhs: f64,
    pub rhs: f64,
}

impl PairEvaluation {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn violated(&self) -> bool {
        self.lhs > self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub verdict: Verdict,
    pub params: Condition,
    /// The pair with the largest violation ratio: a genuine witness when
    /// falsified, otherwise the pair closest to violating.
    pub worst_pair: Option<(Point, Point)>,
    /// Minimum of `rhs − lhs` over the sampled pairs.
    pub margin: f64,
    pub samples_used: u64,
    /// Violating ordered pairs among the plan's anchor points.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchor_witnesses: Vec<(Point, Point)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CertificationReport {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn is_falsified(&self) -> bool {
        self.verdict == Verdict::Falsified
    }

    /// Every reported witness pair: the worst pair (if falsified) followed by
    /// the anchor witnesses.
    pub fn witnesses(&self) -> impl Iterator<Item = &(Point, Point)> {
        let worst = if self.is_falsified() {
            self.worst_pair.as_ref()
        } else {
            None
        };
        worst.into_iter().chain(self.anchor_witnesses.iter())
    }
}

/// Sample points of a map together with their images, reusable across
/// conditions.
#[derive(Debug, Clone)]
pub struct Certifier {
    samples: Samples,
    images: Vec<f64>,
    random_images: Vec<f64>,
    /// Multiplies the inconclusive band; the reduced condition lives on a
    /// `λ`-scaled copy of the original inequality.
    tolerance_scale: f64,
}

impl Certifier {
    pub fn new(map: &MapDescriptor, plan: &SamplingPlan) -> Result<Self> {
        Self::build(map, plan, None)
    }

    /// Sample images under the averaged map `(1−λ)x + λT(x)` instead of `T`.
    pub fn averaged(map: &MapDescriptor, lambda: f64, plan: &SamplingPlan) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::config(format!(
                "lambda must lie in (0, 1], got {lambda}"
            )));
        }
        let mut c = Self::build(map, plan, Some(lambda))?;
        c.tolerance_scale = lambda;
        Ok(c)
    }

    fn build(map: &MapDescriptor, plan: &SamplingPlan, lambda: Option<f64>) -> Result<Self> {
        let samples = build_samples(map.domain(), plan)?;
        let image_of = |rows: &[f64]| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(rows.len());
            for row in rows.chunks(samples.dim) {
                let x = Point::new(row.to_vec())?;
                let tx = map.evaluate(&x)?;
                if tx.coords().iter().any(|v| !v.is_finite()) {
                    return Err(Error::config(format!("map is not finite at {row:?}")));
                }
                match lambda {
                    None => out.extend_from_slice(tx.coords()),
                    Some(l) => out.extend(
                        row.iter()
                            .zip(tx.coords())
                            .map(|(a, b)| (1.0 - l) * a + l * b),
                    ),
                }
            }
            Ok(out)
        };
        let images = image_of(&samples.points)?;
        let random_images = image_of(&samples.random)?;
        Ok(Certifier {
            samples,
            images,
            random_images,
            tolerance_scale: 1.0,
        })
    }

    pub fn n_points(&self) -> usize {
        self.samples.n_points()
    }

    fn grid_pair(&self, i: usize, j: usize) -> (&[f64], &[f64], &[f64], &[f64]) {
        let d = self.samples.dim;
        (
            self.samples.point(i),
            &self.images[i * d..(i + 1) * d],
            self.samples.point(j),
            &self.images[j * d..(j + 1) * d],
        )
    }

    fn random_pair(&self, idx: usize) -> (&[f64], &[f64], &[f64], &[f64]) {
        let d = self.samples.dim;
        let (r, flip) = (idx / 2, idx % 2 == 1);
        let (a, b) = if flip {
            (2 * r + 1, 2 * r)
        } else {
            (2 * r, 2 * r + 1)
        };
        (
            self.samples.random_row(a),
            &self.random_images[a * d..(a + 1) * d],
            self.samples.random_row(b),
            &self.random_images[b * d..(b + 1) * d],
        )
    }

    fn pair_by_index(&self, idx: u64) -> (&[f64], &[f64]) {
        let n = self.samples.n_points() as u64;
        if idx < n * n {
            let (x, _, y, _) = self.grid_pair((idx / n) as usize, (idx % n) as usize);
            (x, y)
        } else {
            let (x, _, y, _) = self.random_pair((idx - n * n) as usize);
            (x, y)
        }
    }

    pub fn check(&self, condition: &Condition) -> Result<CertificationReport> {
        let tol = TAU_MARGIN * self.tolerance_scale;
        let n = self.samples.n_points();
        let nn = (n as u64) * (n as u64);

        let grid_acc = (0..n)
            .into_par_iter()
            .fold(Acc::default, |mut acc, i| {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let (x, tx, y, ty) = self.grid_pair(i, j);
                    acc.push(condition, x, tx, y, ty, (i * n + j) as u64, tol);
                }
                acc
            })
            .reduce(Acc::default, Acc::merge);

        let random_acc = (0..2 * self.samples.n_random_pairs())
            .into_par_iter()
            .fold(Acc::default, |mut acc, r| {
                let (x, tx, y, ty) = self.random_pair(r);
                acc.push(condition, x, tx, y, ty, nn + r as u64, tol);
                acc
            })
            .reduce(Acc::default, Acc::merge);

        let acc = grid_acc.merge(random_acc);
        if acc.count == 0 {
            return Err(Error::config(
                "sampling plan produced no pairs of distinct points",
            ));
        }

        let margin = acc.min_slack.0;
        let verdict = if margin < -tol {
            Verdict::Falsified
        } else if margin >= 0.0 {
            Verdict::Certified
        } else {
            Verdict::Inconclusive
        };
        let worst_idx = match (verdict, acc.worst_violation) {
            (Verdict::Falsified, Some((_, idx))) => idx,
            _ => acc.worst_any.1,
        };
        let to_point = |c: &[f64]| Point::new(c.to_vec()).expect("sample points are finite");
        let (wx, wy) = self.pair_by_index(worst_idx);

        let mut anchor_witnesses = Vec::new();
        for &i in &self.samples.anchors {
            for &j in &self.samples.anchors {
                if i == j {
                    continue;
                }
                let (x, tx, y, ty) = self.grid_pair(i, j);
                let (lhs, rhs) = condition.sides(x, tx, y, ty);
                if rhs - lhs < -tol {
                    anchor_witnesses.push((to_point(x), to_point(y)));
                }
            }
        }

        let mut notes = Vec::new();
        if let Condition::EnrichedAlmost(p) = condition {
            if p.theta_clamped() {
                notes.push(format!(
                    "theta was 0 after conversion and has been clamped to {:e}",
                    p.theta()
                ));
            }
        }

        Ok(CertificationReport {
            verdict,
            params: condition.clone(),
            worst_pair: Some((to_point(wx), to_point(wy))),
            margin,
            samples_used: acc.count,
            anchor_witnesses,
            notes,
        })
    }
}

/// Order-independent reduction state. Every extremum carries its pair index and
/// ties go to the smaller index, so the result does not depend on how rayon
/// splits the work.
#[derive(Debug, Clone, Copy)]
struct Acc {
    count: u64,
    min_slack: (f64, u64),
    worst_any: (f64, u64),
    worst_violation: Option<(f64, u64)>,
}

impl Default for Acc {
    fn default() -> Self {
        Acc {
            count: 0,
            min_slack: (f64::INFINITY, u64::MAX),
            worst_any: (f64::NEG_INFINITY, u64::MAX),
            worst_violation: None,
        }
    }
}

fn pick_min(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn pick_max(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

impl Acc {
    #[inline]
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        c: &Condition,
        x: &[f64],
        tx: &[f64],
        y: &[f64],
        ty: &[f64],
        idx: u64,
        tol: f64,
    ) {
        if x == y {
            return;
        }
        let (lhs, rhs) = c.sides(x, tx, y, ty);
        let slack = rhs - lhs;
        let score = c.score(lhs, rhs, x, y);
        self.count += 1;
        self.min_slack = pick_min(self.min_slack, (slack, idx));
        self.worst_any = pick_max(self.worst_any, (score, idx));
        if slack < -tol {
            self.worst_violation = Some(match self.worst_violation {
                None => (score, idx),
                Some(w) => pick_max(w, (score, idx)),
            });
        }
    }

    fn merge(self, other: Acc) -> Acc {
        Acc {
            count: self.count + other.count,
            min_slack: pick_min(self.min_slack, other.min_slack),
            worst_any: pick_max(self.worst_any, other.worst_any),
            worst_violation: match (self.worst_violation, other.worst_violation) {
                (Some(a), Some(b)) => Some(pick_max(a, b)),
                (a, b) => a.or(b),
            },
        }
    }
}

/// Check `‖b(x−y)+Tx−Ty‖ ≤ θ‖x−y‖ + L‖b(x−y)+Tx−y‖` on the sampled pairs.
pub fn check_enriched_almost(
    map: &MapDescriptor,
    p: EnrichedAlmostParams,
    sampling: &SamplingPlan,
) -> Result<CertificationReport> {
    Certifier::new(map, sampling)?.check(&Condition::EnrichedAlmost(p))
}

/// Check the `(δ, L)`-almost contraction condition, i.e. the enriched one with `b = 0`.
pub fn check_almost(
    map: &MapDescriptor,
    delta: f64,
    l: f64,
    sampling: &SamplingPlan,
) -> Result<CertificationReport> {
    let cond = Condition::almost(delta, l)?;
    Certifier::new(map, sampling)?.check(&cond)
}

pub fn check_uniqueness_condition(
    map: &MapDescriptor,
    u: UniquenessParams,
    sampling: &SamplingPlan,
) -> Result<CertificationReport> {
    Certifier::new(map, sampling)?.check(&Condition::Uniqueness(u))
}
