use serde::{Deserialize, Serialize};

use super::certify::{CertificationReport, Certifier, Condition};
use super::params::EnrichedAlmostParams;
use super::sampling::SamplingPlan;
use crate::error::{Error, Result};
use crate::space::MapDescriptor;

/// Cartesian grid of candidate `(b, θ, L)` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    pub b: Vec<f64>,
    pub theta: Vec<f64>,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
}

impl ParamGrid {
    pub fn new(b: Vec<f64>, theta: Vec<f64>, l: Vec<f64>) -> Result<Self> {
        let g = ParamGrid { b, theta, l };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("b", &self.b), ("theta", &self.theta), ("L", &self.l)] {
            if axis.is_empty() {
                return Err(Error::config(format!(
                    "parameter grid axis {name} is empty"
                )));
            }
            if let Some(v) = axis.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::config(format!(
                    "parameter grid axis {name} has invalid value {v}"
                )));
            }
        }
        if self.theta.iter().all(|t| *t == 0.0) {
            return Err(Error::config("parameter grid has no positive theta"));
        }
        Ok(())
    }

    /// Grid triples satisfying `0 < θ < b + 1`, in grid order.
    pub fn valid_triples(&self) -> Vec<EnrichedAlmostParams> {
        let mut out = Vec::new();
        for &b in &self.b {
            for &t in &self.theta {
                for &l in &self.l {
                    if let Ok(p) = EnrichedAlmostParams::new(b, t, l) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

/// Every grid triple the map certifies for, sorted by `δ = θ/(b+1)`
/// ascending. Triples violating `θ < b + 1` are skipped.
pub fn search_params(
    map: &MapDescriptor,
    sampling: &SamplingPlan,
    grid: &ParamGrid,
) -> Result<Vec<(EnrichedAlmostParams, CertificationReport)>> {
    grid.validate()?;
    let certifier = Certifier::new(map, sampling)?;
    let mut found = Vec::new();
    for p in grid.valid_triples() {
        let report = certifier.check(&Condition::EnrichedAlmost(p))?;
        if report.is_certified() {
            found.push((p, report));
        }
    }
    found.sort_by(|a, b| a.0.delta().total_cmp(&b.0.delta()));
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Point;

    fn has(found: &[(EnrichedAlmostParams, CertificationReport)], b: f64, t: f64, l: f64) -> bool {
        found
            .iter()
            .any(|(p, _)| p.b() == b && p.theta() == t && p.l() == l)
    }

    #[test]
    fn piecewise_search() {
        let map = MapDescriptor::gallery("ex2-piecewise").unwrap();
        let grid = ParamGrid::new(
            vec![0.0, 1.0, 2.0],
            vec![0.5, 1.0, 1.5],
            vec![0.0, 1.5, 3.0],
        )
        .unwrap();
        let plan = SamplingPlan::grid(1e-2)
            .with_anchors([Point::scalar(7.0 / 15.0), Point::scalar(8.0 / 15.0)]);
        let found = search_params(&map, &plan, &grid).unwrap();
        assert!(has(&found, 1.0, 0.5, 3.0));
        assert!(has(&found, 1.0, 1.0, 3.0));
        assert!(has(&found, 1.0, 1.5, 3.0));
        assert!(found.iter().all(|(p, _)| p.b() != 0.0));
        assert!(found.windows(2).all(|w| w[0].0.delta() <= w[1].0.delta()));

        let small_l = ParamGrid::new(vec![1.0], vec![0.5, 1.0, 1.5], vec![0.0, 1.0]).unwrap();
        assert!(search_params(&map, &plan, &small_l).unwrap().is_empty());
    }

    #[test]
    fn banach_contraction_found_with_zero_slack() {
        let half = MapDescriptor::affine_1d(0.5, 0.0, 0.0, 1.0).unwrap();
        let grid = ParamGrid::new(vec![0.0], vec![0.25, 0.5], vec![0.0]).unwrap();
        let found = search_params(&half, &SamplingPlan::grid(1e-2), &grid).unwrap();
        assert_eq!(found.len(), 1);
        assert!(has(&found, 0.0, 0.5, 0.0));
    }

    #[test]
    fn degenerate_grids() {
        assert!(ParamGrid::new(vec![], vec![1.0], vec![0.0]).is_err());
        assert!(ParamGrid::new(vec![1.0], vec![0.0], vec![0.0]).is_err());
        assert!(ParamGrid::new(vec![-1.0], vec![1.0], vec![0.0]).is_err());
    }
}
