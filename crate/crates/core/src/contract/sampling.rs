use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Domain, Point};

/// Upper bound on the number of ordered grid pairs a plan may request.
pub const MAX_GRID_PAIRS: u64 = 1 << 31;

/// Which pairs `(x, y)` a certification looks at.
///
/// Every ordered pair of distinct points of `grid ∪ anchors` is tested, plus
/// `random_pairs` uniformly drawn pairs (each in both orders).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPlan {
    /// Spacing of the uniform grid over the domain's bounding box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(default)]
    pub random_pairs: usize,
    /// Required whenever `random_pairs > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Points always included; violating pairs among them are reported individually.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchors: Vec<Point>,
}

impl SamplingPlan {
    pub fn grid(step: f64) -> Self {
        SamplingPlan {
            grid_step: Some(step),
            random_pairs: 0,
            seed: None,
            anchors: Vec::new(),
        }
    }

    pub fn with_random(mut self, pairs: usize, seed: u64) -> Self {
        self.random_pairs = pairs;
        self.seed = Some(seed);
        self
    }

    pub fn with_anchors(mut self, anchors: impl IntoIterator<Item = Point>) -> Self {
        self.anchors.extend(anchors);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.grid_step {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::config(format!("grid_step must be > 0, got {h}")));
            }
        }
        if self.random_pairs > 0 && self.seed.is_none() {
            return Err(Error::config("random sampling needs an explicit seed"));
        }
        if self.grid_step.is_none() && self.random_pairs == 0 && self.anchors.len() < 2 {
            return Err(Error::config(
                "empty sampling plan: give a grid step, random pairs, or at least two anchors",
            ));
        }
        Ok(())
    }
}

/// Concrete sample: a point set (all ordered pairs used) and a list of random pairs.
#[derive(Debug, Clone)]
pub(crate) struct Samples {
    pub dim: usize,
    /// Row-major `n × dim`.
    pub points: Vec<f64>,
    /// Indices into `points` of the anchors, in plan order.
    pub anchors: Vec<usize>,
    /// Row-major `2m × dim`: pair r is rows 2r and 2r+1.
    pub random: Vec<f64>,
}

impl Samples {
    pub fn n_points(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn n_random_pairs(&self) -> usize {
        self.random.len() / (2 * self.dim)
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn random_row(&self, r: usize) -> &[f64] {
        &self.random[r * self.dim..(r + 1) * self.dim]
    }
}

fn axis_grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
    let last = *v.last().unwrap();
    if hi - last > 1e-12 * hi.abs().max(1.0) {
        v.push(hi);
    } else if let Some(l) = v.last_mut() {
        *l = l.min(hi);
    }
    v
}

pub(crate) fn build_samples(domain: &Domain, plan: &SamplingPlan) -> Result<Samples> {
    plan.validate()?;
    let dim = domain.dim();
    let needs_bounds = plan.grid_step.is_some() || plan.random_pairs > 0;
    let bounds = domain.bounds();
    if needs_bounds && bounds.is_none() {
        return Err(Error::config(
            "grid or random sampling needs a bounded domain",
        ));
    }

    let mut points = Vec::new();
    if let (Some(h), Some((lo, hi))) = (plan.grid_step, bounds.as_ref()) {
        let axes: Vec<Vec<f64>> = (0..dim).map(|d| axis_grid(lo[d], hi[d], h)).collect();
        let total: u64 = axes.iter().map(|a| a.len() as u64).product();
        if total.saturating_mul(total) > MAX_GRID_PAIRS {
            return Err(Error::config(format!(
                "grid of {total} points is too fine ({} pairs); increase grid_step",
                total.saturating_mul(total)
            )));
        }
        let mut idx = vec![0usize; dim];
        let mut buf = vec![0.0; dim];
        'outer: loop {
            for d in 0..dim {
                buf[d] = axes[d][idx[d]];
            }
            if domain.contains(&buf, 0.0) {
                points.extend_from_slice(&buf);
            }
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    continue 'outer;
                }
                idx[d] = 0;
            }
            break;
        }
    }

    let mut anchors = Vec::with_capacity(plan.anchors.len());
    for a in &plan.anchors {
        let a = domain.admit(a)?;
        let n = points.len() / dim;
        let existing = (0..n).find(|&i| &points[i * dim..(i + 1) * dim] == a.coords());
        let idx = match existing {
            Some(i) => i,
            None => {
                points.extend_from_slice(a.coords());
                n
            }
        };
        if !anchors.contains(&idx) {
            anchors.push(idx);
        }
    }

    let mut random = Vec::with_capacity(2 * plan.random_pairs * dim);
    if plan.random_pairs > 0 {
        let (lo, hi) = bounds.expect("checked above");
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed.expect("validated"));
        let mut buf = vec![0.0; dim];
        let mut drawn = 0;
        let mut attempts = 0usize;
        while drawn < 2 * plan.random_pairs {
            attempts += 1;
            if attempts > 1000 * (2 * plan.random_pairs + 10) {
                return Err(Error::config(
                    "could not draw random points inside the domain",
                ));
            }
            for d in 0..dim {
                buf[d] = if lo[d] < hi[d] {
                    rng.gen_range(lo[d]..=hi[d])
                } else {
                    lo[d]
                };
            }
            if domain.contains(&buf, 0.0) {
                random.extend_from_slice(&buf);
                drawn += 1;
            }
        }
    }

    Ok(Samples {
        dim,
        points,
        anchors,
        random,
    })
}

/// All sampled points of a plan (grid, anchors, random) as flat rows.
pub(crate) fn sample_points(domain: &Domain, plan: &SamplingPlan) -> Result<Vec<f64>> {
    let mut s = build_samples(domain, plan)?;
    s.points.append(&mut s.random);
    Ok(s.points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vip::ConvexSet;

    fn interval(lo: f64, hi: f64) -> Domain {
        Domain::Set(ConvexSet::interval(lo, hi).unwrap())
    }

    #[test]
    fn grid_covers_endpoints() {
        let s = build_samples(&interval(0.0, 4.0 / 3.0), &SamplingPlan::grid(1e-3)).unwrap();
        assert_eq!(s.n_points(), 1335);
        assert_eq!(s.point(0)[0], 0.0);
        assert_eq!(s.point(1334)[0], 4.0 / 3.0);
        assert_eq!(s.point(500)[0], 0.5);
        assert_eq!(s.point(1000)[0], 1.0);
    }

    #[test]
    fn anchors_deduplicated() {
        let plan = SamplingPlan::grid(0.25).with_anchors([Point::scalar(0.5), Point::scalar(0.3)]);
        let s = build_samples(&interval(0.0, 1.0), &plan).unwrap();
        assert_eq!(s.n_points(), 6);
        assert_eq!(s.anchors, vec![2, 5]);
    }

    #[test]
    fn plan_errors() {
        let d = interval(0.0, 1.0);
        let empty = SamplingPlan {
            grid_step: None,
            random_pairs: 0,
            seed: None,
            anchors: vec![],
        };
        assert!(matches!(build_samples(&d, &empty), Err(Error::Config(_))));
        let unseeded = SamplingPlan {
            random_pairs: 10,
            ..empty.clone()
        };
        assert!(build_samples(&d, &unseeded).is_err());
        assert!(build_samples(&Domain::Whole { dim: 1 }, &SamplingPlan::grid(0.1)).is_err());
        assert!(build_samples(&d, &SamplingPlan::grid(-1.0)).is_err());
    }

    #[test]
    fn random_points_are_reproducible_and_inside() {
        let ball = Domain::Set(ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap());
        let plan = SamplingPlan {
            grid_step: None,
            random_pairs: 50,
            seed: Some(7),
            anchors: vec![],
        };
        let a = build_samples(&ball, &plan).unwrap();
        let b = build_samples(&ball, &plan).unwrap();
        assert_eq!(a.random, b.random);
        assert_eq!(a.n_random_pairs(), 50);
        for r in 0..100 {
            let p = a.random_row(r);
            assert!(p[0] * p[0] + p[1] * p[1] <= 1.0);
        }
    }
}
