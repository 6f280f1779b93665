//! Variational inequalities `⟨G(x*), c − x*⟩ ≥ 0 for all c ∈ C` solved as
//! fixed points of `P_C(I − γG)` with the Krasnoselskij scheme.

mod set;

pub use set::{project, ConvexSet};

use serde::{Deserialize, Serialize};

use crate::contract::{CertificationReport, Certifier, Condition, SamplingPlan};
use crate::error::{Error, Result};
use crate::iterate::{self, IterationConfig, IterationTrace};
use crate::space::{check_dims, dot, Domain, MapDescriptor, MapKind, Point};
use crate::TAU_VIP;

/// Points used to sample `C` when verifying a solution: grid points stay under this count.
const CHECK_GRID_POINTS: f64 = 40_000.0;
const CHECK_RANDOM_POINTS: usize = 1_000;
/// Half-width of the sampling box around `x*` for unbounded sets.
const UNBOUNDED_RADIUS: f64 = 1.0;

/// Operator `G`, closed convex set `C` and step `γ > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemRepr")]
pub struct VipProblem {
    pub operator: MapDescriptor,
    pub set: ConvexSet,
    pub gamma: f64,
}

#[derive(Deserialize)]
struct ProblemRepr {
    operator: MapDescriptor,
    set: ConvexSet,
    gamma: f64,
}

impl TryFrom<ProblemRepr> for VipProblem {
    type Error = Error;
    fn try_from(r: ProblemRepr) -> Result<Self> {
        VipProblem::new(r.operator, r.set, r.gamma)
    }
}

impl VipProblem {
    pub fn new(operator: MapDescriptor, set: ConvexSet, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::config(format!(
                "step gamma must be > 0, got {gamma}"
            )));
        }
        check_dims(set.dim(), operator.dim())?;
        Ok(VipProblem {
            operator,
            set,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    /// `G` restricted to `C`, so it can be sampled even when defined on all of ℝⁿ.
    pub fn operator_on_set(&self) -> Result<MapDescriptor> {
        MapDescriptor::from_parts(self.operator.kind().clone(), Domain::Set(self.set.clone()))
    }

    /// Monotonicity of `G` sampled over pairs in `C`.
    pub fn check_monotone(&self, plan: &SamplingPlan) -> Result<CertificationReport> {
        check_monotone(&self.operator_on_set()?, plan)
    }
}

/// `P_C(I − γG)` as a self-map of `C`.
pub fn vip_operator(p: &VipProblem) -> Result<MapDescriptor> {
    MapDescriptor::from_parts(
        MapKind::ProjectionComposite {
            set: p.set.clone(),
            operator: Box::new(p.operator.clone()),
            gamma: p.gamma,
        },
        Domain::Set(p.set.clone()),
    )
    .map(|m| m.with_label("vip-operator"))
}

/// Sampled test of `⟨G x − G y, x − y⟩ ≥ 0` over pairs in the domain of `G`.
pub fn check_monotone(g: &MapDescriptor, plan: &SamplingPlan) -> Result<CertificationReport> {
    Certifier::new(g, plan)?.check(&Condition::Monotone)
}

/// Outcome of checking a candidate solution against the inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VipCheck {
    /// `‖x* − P_C(x* − γG x*)‖`
    pub fixed_point_gap: f64,
    /// `min ⟨G x*, c − x*⟩` over the sampled `c`.
    pub min_inner: f64,
    pub worst_c: Point,
    pub samples: usize,
    pub passed: bool,
}

/// Check that `x` is a fixed point of the VIP operator to `tau_fix` and that
/// `⟨G x, c − x⟩ ≥ −τ` on a sample of `C`.
pub fn verify_solution(p: &VipProblem, x: &Point, tau_fix: f64, seed: u64) -> Result<VipCheck> {
    let x = Domain::Set(p.set.clone()).admit(x)?;
    let t = vip_operator(p)?;
    let gap = t.residual(&x)?;
    let gx = p.operator.evaluate(&x)?;

    let dim = p.dim();
    let (domain, project_back) = match p.set.bounding_box() {
        Some(_) => (Domain::Set(p.set.clone()), false),
        None => {
            let lo = x.coords().iter().map(|c| c - UNBOUNDED_RADIUS).collect();
            let hi = x.coords().iter().map(|c| c + UNBOUNDED_RADIUS).collect();
            (Domain::Set(ConvexSet::boxed(lo, hi)?), true)
        }
    };
    let (lo, hi) = domain.bounds().expect("bounded by construction");
    let extent = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| h - l)
        .fold(0.0f64, f64::max);
    let per_axis = CHECK_GRID_POINTS.powf(1.0 / dim as f64).floor().max(2.0);
    let step = (extent / (per_axis - 1.0)).max(1e-3);
    let plan = SamplingPlan {
        grid_step: (extent > 0.0).then_some(step),
        random_pairs: CHECK_RANDOM_POINTS / 2,
        seed: Some(seed),
        anchors: vec![x.clone()],
    };
    let samples = crate::contract::sample_points(&domain, &plan)?;

    let mut min_inner = f64::INFINITY;
    let mut worst_c = x.clone();
    let mut c = vec![0.0; dim];
    let mut diff = vec![0.0; dim];
    for row in samples.chunks(dim) {
        if project_back {
            p.set.project_into(row, &mut c);
        } else {
            c.copy_from_slice(row);
        }
        for i in 0..dim {
            diff[i] = c[i] - x.coords()[i];
        }
        let v = dot(gx.coords(), &diff);
        if v < min_inner {
            min_inner = v;
            worst_c = Point::from_raw(c.clone());
        }
    }
    Ok(VipCheck {
        fixed_point_gap: gap,
        min_inner,
        worst_c,
        samples: samples.len() / dim,
        passed: gap <= tau_fix && min_inner >= -TAU_VIP,
    })
}

/// A Krasnoselskij run on the VIP operator plus, on convergence, a check of the limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VipOutcome {
    pub trace: IterationTrace,
    pub check: Option<VipCheck>,
}

impl VipOutcome {
    pub fn solution(&self) -> Option<&Point> {
        self.trace.limit.as_ref()
    }

    pub fn solved(&self) -> bool {
        self.check.as_ref().is_some_and(|c| c.passed)
    }
}

/// `x_{n+1} = (1−λ)x_n + λ P_C(x_n − γ G x_n)` from `x0 ∈ C`.
pub fn solve_vip(
    p: &VipProblem,
    lambda: f64,
    x0: &Point,
    cfg: &IterationConfig,
) -> Result<VipOutcome> {
    let t = vip_operator(p)?;
    let trace = iterate::run(&t, lambda, x0, cfg)?;
    let check = match &trace.limit {
        Some(x) => Some(verify_solution(p, x, cfg.tau_fix, 0)?),
        None => None,
    };
    Ok(VipOutcome { trace, check })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::Verdict;
    use crate::iterate::{StopMode, StoppingRule};

    fn problem() -> VipProblem {
        let g =
            MapDescriptor::affine(vec![vec![2.0]], vec![-2.0], Domain::Whole { dim: 1 }).unwrap();
        VipProblem::new(g, ConvexSet::interval(2.0 / 3.0, 4.0 / 3.0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn interval_problem_solves_in_one_step() {
        let cfg = IterationConfig::new(StoppingRule::new(1e-12, 100, StopMode::Residual).unwrap());
        let out = solve_vip(&problem(), 0.5, &Point::scalar(0.8), &cfg).unwrap();
        assert!(out.solved(), "{out:?}");
        assert_eq!(out.trace.steps(), 1);
        assert!((out.solution().unwrap().x() - 1.0).abs() < 1e-12);
        let chk = out.check.unwrap();
        assert!(chk.min_inner.abs() < 1e-12);
    }

    #[test]
    fn start_outside_set_is_domain_error() {
        let err = solve_vip(
            &problem(),
            0.5,
            &Point::scalar(0.1),
            &IterationConfig::default(),
        )
        .unwrap_err();
        assert!(err.is_domain());
    }

    #[test]
    fn monotone_operator() {
        let rep = problem().check_monotone(&SamplingPlan::grid(1e-2)).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified);
        let g = MapDescriptor::affine_1d(2.0, -2.0, 0.0, 2.0).unwrap();
        let rep = check_monotone(&g, &SamplingPlan::grid(1e-2)).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified);
        let c = MapDescriptor::affine_1d(0.0, 3.0, 0.0, 2.0).unwrap();
        assert!(check_monotone(&c, &SamplingPlan::grid(1e-1))
            .unwrap()
            .is_certified());
        let g =
            MapDescriptor::affine(vec![vec![-1.0]], vec![0.0], Domain::Whole { dim: 1 }).unwrap();
        let p = VipProblem::new(g, ConvexSet::interval(0.0, 1.0).unwrap(), 0.5).unwrap();
        let rep = p.check_monotone(&SamplingPlan::grid(1e-1)).unwrap();
        assert_eq!(rep.verdict, Verdict::Falsified);
    }

    #[test]
    fn wrong_candidate_fails_verification() {
        let chk = verify_solution(&problem(), &Point::scalar(0.8), 1e-9, 1).unwrap();
        assert!(!chk.passed);
        assert!(chk.min_inner < 0.0);
    }

    #[test]
    fn halfspace_problem() {
        // G(x) = x − (2, 0), C = {x₁ ≤ 1}; the solution is (1, 0).
        let g = MapDescriptor::affine(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![-2.0, 0.0],
            Domain::Whole { dim: 2 },
        )
        .unwrap();
        let p =
            VipProblem::new(g, ConvexSet::halfspace(vec![1.0, 0.0], 1.0).unwrap(), 0.5).unwrap();
        let cfg = IterationConfig::new(StoppingRule::new(1e-12, 500, StopMode::Residual).unwrap());
        let out = solve_vip(&p, 0.5, &Point::new(vec![0.0, 1.0]).unwrap(), &cfg).unwrap();
        assert!(out.solved(), "{:?}", out.check);
        let x = out.solution().unwrap();
        assert!((x.coords()[0] - 1.0).abs() < 1e-9 && x.coords()[1].abs() < 1e-9);
    }

    #[test]
    fn bad_problems() {
        let g =
            MapDescriptor::affine(vec![vec![1.0]], vec![0.0], Domain::Whole { dim: 1 }).unwrap();
        let c = ConvexSet::interval(0.0, 1.0).unwrap();
        assert!(VipProblem::new(g.clone(), c.clone(), 0.0).is_err());
        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(VipProblem::new(g, ball, 1.0).is_err());
    }
}
