//! Points of ℝⁿ, the Euclidean metric, map descriptors and the map gallery.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vip::ConvexSet;
use crate::TAU_DOM;

/// A point of finite-dimensional real space. Always non-empty and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::config("a point needs at least one coordinate"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::config(format!(
                "coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Point(coords))
    }

    /// One-dimensional point.
    ///
    /// Panics if `x` is not finite.
    pub fn scalar(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite coordinate {x}");
        Point(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// First coordinate; handy for the one-dimensional examples.
    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn distance(&self, other: &Point) -> Result<f64> {
        distance(self, other)
    }

    /// `(1−λ)·self + λ·other`.
    pub fn lerp(&self, other: &Point, lambda: f64) -> Result<Point> {
        check_dims(self.dim(), other.dim())?;
        let coords = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
            .collect();
        Ok(Point(coords))
    }

    /// Build from coordinates already known to be finite.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

/// Euclidean distance `‖x − y‖`.
pub fn distance(x: &Point, y: &Point) -> Result<f64> {
    check_dims(x.dim(), y.dim())?;
    Ok(dist_slices(x.coords(), y.coords()))
}

pub(crate) fn dist_slices(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    if a.len() == 1 {
        return a[0].abs();
    }
    dot(a, a).sqrt()
}

/// Where a map is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Set(ConvexSet),
    /// All of ℝⁿ. Fine for operators such as `G` in a variational inequality,
    /// but cannot be sampled.
    Whole {
        dim: usize,
    },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Set(s) => s.dim(),
            Domain::Whole { dim } => *dim,
        }
    }

    /// Componentwise bounding box, if the domain is bounded.
    pub fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Domain::Set(s) => s.bounding_box(),
            Domain::Whole { .. } => None,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Domain::Set(s) => s.contains(x, tol),
            Domain::Whole { dim } => x.len() == *dim,
        }
    }

    /// Accept `x` if it lies in the domain up to [`TAU_DOM`], clamping it onto
    /// the boundary when it is marginally outside.
    pub fn admit(&self, x: &Point) -> Result<Point> {
        check_dims(self.dim(), x.dim())?;
        match self {
            Domain::Whole { .. } => Ok(x.clone()),
            Domain::Set(s) => s.admit(x, TAU_DOM),
        }
    }
}

/// One affine piece `x ↦ slope·x + intercept` of a one-dimensional map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: f64,
    pub intercept: f64,
}

/// Piecewise-affine map of an interval.
///
/// Piece `i` covers `[breakpoints[i], breakpoints[i+1])`; the last piece also
/// owns its right endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseRepr")]
pub struct Piecewise1d {
    breakpoints: Vec<f64>,
    pieces: Vec<AffinePiece>,
}

#[derive(Deserialize)]
struct PiecewiseRepr {
    breakpoints: Vec<f64>,
    pieces: Vec<AffinePiece>,
}

impl TryFrom<PiecewiseRepr> for Piecewise1d {
    type Error = Error;
    fn try_from(r: PiecewiseRepr) -> Result<Self> {
        Piecewise1d::new(r.breakpoints, r.pieces)
    }
}

impl Piecewise1d {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<AffinePiece>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::config(
                "piecewise map needs at least two breakpoints",
            ));
        }
        if pieces.len() + 1 != breakpoints.len() {
            return Err(Error::config(format!(
                "piecewise map with {} breakpoints needs {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                pieces.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite())
            || pieces
                .iter()
                .any(|p| !p.slope.is_finite() || !p.intercept.is_finite())
        {
            return Err(Error::config("piecewise map coefficients must be finite"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("breakpoints must be strictly increasing"));
        }
        Ok(Piecewise1d {
            breakpoints,
            pieces,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    /// Index of the piece owning `x` (clamped to the first/last piece).
    pub fn piece_index(&self, x: f64) -> usize {
        let interior = &self.breakpoints[1..self.breakpoints.len() - 1];
        interior.partition_point(|&b| b <= x)
    }

    pub fn apply(&self, x: f64) -> f64 {
        let p = self.pieces[self.piece_index(x)];
        p.slope * x + p.intercept
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }
}

/// How a map computes its image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapKind {
    /// `x ↦ A x + c`, `A` given row-major.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    Piecewise(Piecewise1d),
    /// `x ↦ P_C(x − γ G(x))`.
    ProjectionComposite {
        set: ConvexSet,
        operator: Box<MapDescriptor>,
        gamma: f64,
    },
}

/// A map together with the region it is defined on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr")]
pub struct MapDescriptor {
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    kind: MapKind,
    domain: Domain,
}

#[derive(Deserialize)]
struct MapRepr {
    label: Option<String>,
    kind: MapKind,
    domain: Domain,
}

impl TryFrom<MapRepr> for MapDescriptor {
    type Error = Error;
    fn try_from(r: MapRepr) -> Result<Self> {
        let m = MapDescriptor::from_parts(r.kind, r.domain)?;
        Ok(match r.label {
            Some(l) => m.with_label(l),
            None => m,
        })
    }
}

/// Stable gallery identifiers.
pub const GALLERY_IDS: &[&str] = &["ex2-piecewise", "identity-01", "affine"];

impl MapDescriptor {
    pub fn from_parts(kind: MapKind, domain: Domain) -> Result<Self> {
        let dim = domain.dim();
        match &kind {
            MapKind::Affine { matrix, offset } => {
                check_dims(dim, offset.len())?;
                check_dims(dim, matrix.len())?;
                for row in matrix {
                    check_dims(dim, row.len())?;
                }
                if matrix
                    .iter()
                    .flatten()
                    .chain(offset)
                    .any(|v| !v.is_finite())
                {
                    return Err(Error::config("affine coefficients must be finite"));
                }
            }
            MapKind::Piecewise(pw) => {
                check_dims(1, dim)?;
                let (lo, hi) = pw.interval();
                if let Some((dlo, dhi)) = domain.bounds() {
                    if dlo[0] < lo - TAU_DOM || dhi[0] > hi + TAU_DOM {
                        return Err(Error::config(format!(
                            "domain [{}, {}] exceeds the breakpoint range [{lo}, {hi}]",
                            dlo[0], dhi[0]
                        )));
                    }
                } else {
                    return Err(Error::config("piecewise map needs a bounded domain"));
                }
            }
            MapKind::ProjectionComposite {
                set,
                operator,
                gamma,
            } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::config(format!(
                        "step gamma must be > 0, got {gamma}"
                    )));
                }
                check_dims(dim, set.dim())?;
                check_dims(dim, operator.dim())?;
            }
        }
        Ok(MapDescriptor {
            label: None,
            kind,
            domain,
        })
    }

    /// `x ↦ A x + c` on `domain`.
    pub fn affine(matrix: Vec<Vec<f64>>, offset: Vec<f64>, domain: Domain) -> Result<Self> {
        Self::from_parts(MapKind::Affine { matrix, offset }, domain)
    }

    /// One-dimensional `x ↦ slope·x + intercept` on `[lo, hi]`.
    pub fn affine_1d(slope: f64, intercept: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::affine(
            vec![vec![slope]],
            vec![intercept],
            Domain::Set(ConvexSet::interval(lo, hi)?),
        )
    }

    /// Piecewise-affine map on the full breakpoint range.
    pub fn piecewise(pw: Piecewise1d) -> Result<Self> {
        let (lo, hi) = pw.interval();
        Self::from_parts(
            MapKind::Piecewise(pw),
            Domain::Set(ConvexSet::interval(lo, hi)?),
        )
    }

    /// Look up a gallery map by id. The `"affine"` id needs coefficients, see
    /// [`MapDescriptor::affine`].
    pub fn gallery(id: &str) -> Result<Self> {
        let m = match id {
            "ex2-piecewise" => {
                let pw = Piecewise1d::new(
                    vec![0.0, 2.0 / 3.0, 4.0 / 3.0],
                    vec![
                        AffinePiece {
                            slope: -1.0,
                            intercept: 1.0,
                        },
                        AffinePiece {
                            slope: -1.0,
                            intercept: 2.0,
                        },
                    ],
                )?;
                Self::piecewise(pw)?
            }
            "identity-01" => Self::affine_1d(1.0, 0.0, 0.0, 1.0)?,
            "affine" => {
                return Err(Error::config(
                    "gallery id \"affine\" needs user-provided matrix and offset",
                ))
            }
            other => {
                return Err(Error::config(format!(
                    "unknown gallery id {other:?} (known: {})",
                    GALLERY_IDS.join(", ")
                )))
            }
        };
        Ok(m.with_label(id))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// `T(x)` for `x` in the domain (up to [`TAU_DOM`]).
    pub fn evaluate(&self, x: &Point) -> Result<Point> {
        let x = self.domain.admit(x)?;
        let mut out = vec![0.0; x.dim()];
        self.eval_into(x.coords(), &mut out)?;
        Ok(Point::from_raw(out))
    }

    /// Raw evaluation into `out`; `x` must already be admitted.
    pub(crate) fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.kind {
            MapKind::Affine { matrix, offset } => {
                for ((o, row), c) in out.iter_mut().zip(matrix).zip(offset) {
                    *o = dot(row, x) + c;
                }
            }
            MapKind::Piecewise(pw) => out[0] = pw.apply(x[0]),
            MapKind::ProjectionComposite {
                set,
                operator,
                gamma,
            } => {
                let xp = Point::from_raw(x.to_vec());
                let g = operator.evaluate(&xp)?;
                let shifted: Vec<f64> = x
                    .iter()
                    .zip(g.coords())
                    .map(|(xi, gi)| xi - gamma * gi)
                    .collect();
                set.project_into(&shifted, out);
            }
        }
        Ok(())
    }

    /// `‖x − T(x)‖`.
    pub fn residual(&self, x: &Point) -> Result<f64> {
        let x = self.domain.admit(x)?;
        let mut out = vec![0.0; x.dim()];
        self.eval_into(x.coords(), &mut out)?;
        Ok(dist_slices(x.coords(), &out))
    }
}

/// `T(x)`; see [`MapDescriptor::evaluate`].
pub fn evaluate(map: &MapDescriptor, x: &Point) -> Result<Point> {
    map.evaluate(x)
}

/// `‖x − T(x)‖`.
pub fn residual(map: &MapDescriptor, x: &Point) -> Result<f64> {
    map.residual(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex2() -> MapDescriptor {
        MapDescriptor::gallery("ex2-piecewise").unwrap()
    }

    #[test]
    fn piecewise_gallery_branches() {
        let t = ex2();
        assert_eq!(evaluate(&t, &Point::scalar(0.2)).unwrap().x(), 0.8);
        assert_eq!(evaluate(&t, &Point::scalar(1.2)).unwrap().x(), 0.8);
        // left-closed pieces: 2/3 belongs to the second branch
        let at = evaluate(&t, &Point::scalar(2.0 / 3.0)).unwrap().x();
        assert!((at - 4.0 / 3.0).abs() < 1e-15);
        // the right endpoint belongs to the last piece
        let end = evaluate(&t, &Point::scalar(4.0 / 3.0)).unwrap().x();
        assert!((end - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_gallery() {
        let t = MapDescriptor::gallery("identity-01").unwrap();
        assert_eq!(evaluate(&t, &Point::scalar(0.37)).unwrap().x(), 0.37);
    }

    #[test]
    fn distances() {
        let d = distance(&Point::scalar(7.0 / 15.0), &Point::scalar(8.0 / 15.0)).unwrap();
        assert!((d - 1.0 / 15.0).abs() < 1e-15);
        let p = Point::new(vec![0.0, 3.0]).unwrap();
        assert_eq!(distance(&p, &p).unwrap(), 0.0);
        let q = Point::new(vec![4.0, 0.0]).unwrap();
        assert_eq!(distance(&p, &q).unwrap(), 5.0);
        assert_eq!(
            distance(&p, &Point::scalar(1.0)),
            Err(Error::Dimension {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn residuals_at_fixed_points() {
        let t = ex2();
        assert_eq!(residual(&t, &Point::scalar(0.5)).unwrap(), 0.0);
        assert_eq!(residual(&t, &Point::scalar(1.0)).unwrap(), 0.0);
        assert_eq!(residual(&t, &Point::scalar(0.0)).unwrap(), 1.0);
    }

    #[test]
    fn domain_violation_and_clamp() {
        let t = ex2();
        match evaluate(&t, &Point::scalar(1.5)) {
            Err(Error::Domain { coord, value, .. }) => {
                assert_eq!(coord, 0);
                assert_eq!(value, 1.5);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
        // marginally outside is clamped onto the boundary
        let y = evaluate(&t, &Point::scalar(-5e-10)).unwrap();
        assert_eq!(y.x(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Point::new(vec![]).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Piecewise1d::new(
            vec![0.0, 0.0],
            vec![AffinePiece {
                slope: 1.0,
                intercept: 0.0
            }]
        )
        .is_err());
        assert!(MapDescriptor::gallery("nope").is_err());
        assert!(MapDescriptor::gallery("affine").is_err());
        assert!(
            MapDescriptor::affine(vec![vec![1.0, 0.0]], vec![0.0], Domain::Whole { dim: 1 })
                .is_err()
        );
    }

    #[test]
    fn point_json_is_a_plain_array() {
        let p = Point::new(vec![1.0, -2.5]).unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), "[1.0,-2.5]");
        assert!(serde_json::from_str::<Point>("[]").is_err());
    }

    #[test]
    fn descriptor_json_roundtrip() {
        let t = ex2();
        let s = serde_json::to_string(&t).unwrap();
        let back: MapDescriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
