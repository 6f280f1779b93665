use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{check_dims, dist_slices, dot, norm, Point};

/// Closed convex set with a closed-form nearest-point projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", try_from = "SetRepr")]
pub enum ConvexSet {
    Interval {
        lo: f64,
        hi: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{ x : ⟨normal, x⟩ ≤ offset }`
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum SetRepr {
    Interval { lo: f64, hi: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Halfspace { normal: Vec<f64>, offset: f64 },
}

impl TryFrom<SetRepr> for ConvexSet {
    type Error = Error;
    fn try_from(r: SetRepr) -> Result<Self> {
        let s = match r {
            SetRepr::Interval { lo, hi } => ConvexSet::Interval { lo, hi },
            SetRepr::Box { lo, hi } => ConvexSet::Box { lo, hi },
            SetRepr::Ball { center, radius } => ConvexSet::Ball { center, radius },
            SetRepr::Halfspace { normal, offset } => ConvexSet::Halfspace { normal, offset },
        };
        s.validate()?;
        Ok(s)
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl ConvexSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        let s = ConvexSet::Interval { lo, hi };
        s.validate()?;
        Ok(s)
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let s = ConvexSet::Box { lo, hi };
        s.validate()?;
        Ok(s)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let s = ConvexSet::Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let s = ConvexSet::Halfspace { normal, offset };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Interval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::config(format!("invalid interval [{lo}, {hi}]")));
                }
            }
            ConvexSet::Box { lo, hi } => {
                if lo.is_empty() {
                    return Err(Error::config("box needs at least one dimension"));
                }
                check_dims(lo.len(), hi.len())?;
                if !all_finite(lo) || !all_finite(hi) || lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::config("box bounds must be finite with lo ≤ hi"));
                }
            }
            ConvexSet::Ball { center, radius } => {
                if center.is_empty() || !all_finite(center) {
                    return Err(Error::config(
                        "ball center must be a finite, non-empty vector",
                    ));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::config(format!(
                        "ball radius must be > 0, got {radius}"
                    )));
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                if normal.is_empty() || !all_finite(normal) || !offset.is_finite() {
                    return Err(Error::config("halfspace coefficients must be finite"));
                }
                if normal.iter().all(|a| *a == 0.0) {
                    return Err(Error::config("halfspace normal must be nonzero"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Interval { .. } => 1,
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Halfspace { normal, .. } => normal.len(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, ConvexSet::Halfspace { .. })
    }

    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            ConvexSet::Interval { lo, hi } => Some((vec![*lo], vec![*hi])),
            ConvexSet::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            ConvexSet::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            ConvexSet::Halfspace { .. } => None,
        }
    }

    /// Nearest point of the set to `x`.
    pub fn project(&self, x: &Point) -> Result<Point> {
        check_dims(self.dim(), x.dim())?;
        let mut out = vec![0.0; x.dim()];
        self.project_into(x.coords(), &mut out);
        Ok(Point::from_raw(out))
    }

    pub(crate) fn project_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ConvexSet::Interval { lo, hi } => out[0] = x[0].clamp(*lo, *hi),
            ConvexSet::Box { lo, hi } => {
                for i in 0..x.len() {
                    out[i] = x[i].clamp(lo[i], hi[i]);
                }
            }
            ConvexSet::Ball { center, radius } => {
                let d = dist_slices(x, center);
                if d <= *radius {
                    out.copy_from_slice(x);
                } else {
                    let s = radius / d;
                    for i in 0..x.len() {
                        out[i] = center[i] + s * (x[i] - center[i]);
                    }
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                let excess = dot(normal, x) - offset;
                if excess <= 0.0 {
                    out.copy_from_slice(x);
                } else {
                    let s = excess / dot(normal, normal);
                    for i in 0..x.len() {
                        out[i] = x[i] - s * normal[i];
                    }
                }
            }
        }
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        match self {
            ConvexSet::Ball { center, radius } => (dist_slices(x, center) - radius).max(0.0),
            ConvexSet::Halfspace { normal, offset } => {
                ((dot(normal, x) - offset) / norm(normal)).max(0.0)
            }
            _ => {
                let mut p = vec![0.0; x.len()];
                self.project_into(x, &mut p);
                dist_slices(x, &p)
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim() && self.distance_to(x) <= tol
    }

    /// Accept a point within `tol` of the set, projecting it onto the set.
    pub(crate) fn admit(&self, x: &Point, tol: f64) -> Result<Point> {
        check_dims(self.dim(), x.dim())?;
        let c = x.coords();
        let bounds = match self {
            ConvexSet::Interval { lo, hi } => {
                Some((std::slice::from_ref(lo), std::slice::from_ref(hi)))
            }
            ConvexSet::Box { lo, hi } => Some((lo.as_slice(), hi.as_slice())),
            _ => None,
        };
        if let Some((lo, hi)) = bounds {
            for (i, v) in c.iter().enumerate() {
                if *v < lo[i] - tol || *v > hi[i] + tol {
                    return Err(Error::Domain {
                        coord: i,
                        value: *v,
                        lo: lo[i],
                        hi: hi[i],
                    });
                }
            }
        } else {
            let d = self.distance_to(c);
            if d > tol {
                return Err(Error::OutsideSet { distance: d });
            }
            if d == 0.0 {
                return Ok(x.clone());
            }
        }
        let mut out = vec![0.0; c.len()];
        self.project_into(c, &mut out);
        Ok(Point::from_raw(out))
    }
}

/// Nearest point of `set` to `x`.
pub fn project(set: &ConvexSet, x: &Point) -> Result<Point> {
    set.project(x)
}
