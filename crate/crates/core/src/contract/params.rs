use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest contraction factor used when a class conversion lands on `θ = 0`,
/// which the enriched almost contraction definition excludes.
pub const THETA_FLOOR: f64 = 1e-12;

fn finite_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!(
            "{name} must be finite and ≥ 0, got {v}"
        )))
    }
}

/// Constants `(b, θ, L)` of an enriched almost contraction
/// `‖b(x−y)+Tx−Ty‖ ≤ θ‖x−y‖ + L‖b(x−y)+Tx−y‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr")]
pub struct EnrichedAlmostParams {
    b: f64,
    theta: f64,
    #[serde(rename = "L")]
    l: f64,
    /// Set when a conversion produced `θ = 0` and it was raised to [`THETA_FLOOR`].
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    theta_clamped: bool,
}

#[derive(Deserialize)]
struct ParamsRepr {
    b: f64,
    theta: f64,
    #[serde(rename = "L")]
    l: f64,
    #[serde(default)]
    theta_clamped: bool,
}

impl TryFrom<ParamsRepr> for EnrichedAlmostParams {
    type Error = Error;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        let mut p = EnrichedAlmostParams::new(r.b, r.theta, r.l)?;
        p.theta_clamped = r.theta_clamped;
        Ok(p)
    }
}

impl EnrichedAlmostParams {
    pub fn new(b: f64, theta: f64, l: f64) -> Result<Self> {
        finite_nonneg("b", b)?;
        finite_nonneg("L", l)?;
        if !(theta.is_finite() && theta > 0.0 && theta < b + 1.0) {
            return Err(Error::config(format!(
                "theta must satisfy 0 < theta < b + 1 = {}, got {theta}",
                b + 1.0
            )));
        }
        Ok(EnrichedAlmostParams {
            b,
            theta,
            l,
            theta_clamped: false,
        })
    }

    /// Plain `(δ, L)`-almost contraction, i.e. `b = 0`, `θ = δ`.
    pub fn almost(delta: f64, l: f64) -> Result<Self> {
        Self::new(0.0, delta, l)
    }

    /// `(b, θ)`-enriched contraction, i.e. `L = 0`.
    pub fn enriched_contraction(b: f64, theta: f64) -> Result<Self> {
        let (theta, clamped) = floor_theta(theta);
        let mut p = Self::new(b, theta, 0.0)?;
        p.theta_clamped = clamped;
        Ok(p)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn theta_clamped(&self) -> bool {
        self.theta_clamped
    }

    /// `δ = θ/(b+1)`, the almost-contraction factor of the averaged map.
    pub fn delta(&self) -> f64 {
        self.theta / (self.b + 1.0)
    }

    /// `λ = 1/(b+1)`.
    pub fn lambda(&self) -> f64 {
        1.0 / (self.b + 1.0)
    }
}

fn floor_theta(theta: f64) -> (f64, bool) {
    if theta == 0.0 {
        (THETA_FLOOR, true)
    } else {
        (theta, false)
    }
}

fn build_converted(b: f64, theta: f64, l: f64) -> EnrichedAlmostParams {
    let (theta, clamped) = floor_theta(theta);
    let mut p = EnrichedAlmostParams::new(b, theta, l)
        .expect("class conversion produced invalid constants");
    p.theta_clamped = clamped;
    p
}

/// `(k, a)`-enriched Kannan: `‖k(x−y)+Tx−Ty‖ ≤ a(‖x−Tx‖ + ‖y−Ty‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KannanParams {
    pub k: f64,
    pub a: f64,
}

impl KannanParams {
    pub fn new(k: f64, a: f64) -> Result<Self> {
        finite_nonneg("k", k)?;
        if !(a.is_finite() && (0.0..0.5).contains(&a)) {
            return Err(Error::config(format!(
                "Kannan a must lie in [0, 1/2), got {a}"
            )));
        }
        Ok(KannanParams { k, a })
    }
}

/// `(k, b)`-enriched Chatterjea:
/// `‖k(x−y)+Tx−Ty‖ ≤ b(‖(k+1)(x−y)+y−Ty‖ + ‖(k+1)(y−x)+x−Tx‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChatterjeaParams {
    pub k: f64,
    pub b: f64,
}

impl ChatterjeaParams {
    pub fn new(k: f64, b: f64) -> Result<Self> {
        finite_nonneg("k", k)?;
        if !(b.is_finite() && (0.0..0.5).contains(&b)) {
            return Err(Error::config(format!(
                "Chatterjea b must lie in [0, 1/2), got {b}"
            )));
        }
        Ok(ChatterjeaParams { k, b })
    }
}

/// `(k, h)`-enriched Bianchini: `‖k(x−y)+Tx−Ty‖ ≤ h·max(‖x−Tx‖, ‖y−Ty‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BianchiniParams {
    pub k: f64,
    pub h: f64,
}

impl BianchiniParams {
    pub fn new(k: f64, h: f64) -> Result<Self> {
        finite_nonneg("k", k)?;
        if !(h.is_finite() && (0.0..1.0).contains(&h)) {
            return Err(Error::config(format!(
                "Bianchini h must lie in [0, 1), got {h}"
            )));
        }
        Ok(BianchiniParams { k, h })
    }
}

/// Constants of the uniqueness condition `‖Tx−Ty‖ ≤ δ₁‖x−y‖ + L₁‖x−Tx‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessParams {
    pub delta1: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
}

impl UniquenessParams {
    pub fn new(delta1: f64, l1: f64) -> Result<Self> {
        if !(delta1.is_finite() && delta1 > 0.0 && delta1 < 1.0) {
            return Err(Error::config(format!(
                "delta1 must lie in (0, 1), got {delta1}"
            )));
        }
        finite_nonneg("L1", l1)?;
        Ok(UniquenessParams { delta1, l1 })
    }
}

/// Enriched Kannan → enriched almost contraction with the published constants
/// `(k, a/(1−a), 2a/(1−a))`.
///
/// These constants are not valid for every Kannan map once `k > 0`; see
/// [`sound_from_kannan`].
pub fn from_kannan(p: KannanParams) -> EnrichedAlmostParams {
    let q = p.a / (1.0 - p.a);
    build_converted(p.k, q, 2.0 * q)
}

/// Enriched Chatterjea → `(k, b/(1−b), 2b/(1−b))`. Same caveat as [`from_kannan`].
pub fn from_chatterjea(p: ChatterjeaParams) -> EnrichedAlmostParams {
    let q = p.b / (1.0 - p.b);
    build_converted(p.k, q, 2.0 * q)
}

/// Enriched Bianchini → `(k, h, 2h)`. Same caveat as [`from_kannan`]; the
/// slack `2h` is also too small for `h > 1/2`.
pub fn from_bianchini(p: BianchiniParams) -> EnrichedAlmostParams {
    build_converted(p.k, p.h, 2.0 * p.h)
}

// The averaged map T_λ, λ = 1/(k+1), satisfies the classical (non-enriched)
// condition with the same constant, hence is a (δ, L)-almost contraction. Scaling
// back by 1/λ turns δ into θ = (k+1)δ while L is unchanged.

/// Enriched Kannan → `(k, (k+1)·a/(1−a), 2a/(1−a))`, valid for every Kannan map.
pub fn sound_from_kannan(p: KannanParams) -> EnrichedAlmostParams {
    let q = p.a / (1.0 - p.a);
    build_converted(p.k, (p.k + 1.0) * q, 2.0 * q)
}

/// Enriched Chatterjea → `(k, (k+1)·b/(1−b), 2b/(1−b))`.
pub fn sound_from_chatterjea(p: ChatterjeaParams) -> EnrichedAlmostParams {
    let q = p.b / (1.0 - p.b);
    build_converted(p.k, (p.k + 1.0) * q, 2.0 * q)
}

/// Enriched Bianchini → `(k, (k+1)·h, max(2h, h/(1−h)))`.
pub fn sound_from_bianchini(p: BianchiniParams) -> EnrichedAlmostParams {
    let l = (2.0 * p.h).max(p.h / (1.0 - p.h));
    build_converted(p.k, (p.k + 1.0) * p.h, l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(p: EnrichedAlmostParams) -> (f64, f64, f64) {
        (p.b(), p.theta(), p.l())
    }

    fn close(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15 && (a.2 - b.2).abs() < 1e-15
    }

    #[test]
    fn kannan_substitution() {
        let k = |k, a| triple(from_kannan(KannanParams::new(k, a).unwrap()));
        assert!(close(k(2.0, 1.0 / 3.0), (2.0, 0.5, 1.0)));
        assert!(close(k(1.0, 0.4), (1.0, 2.0 / 3.0, 4.0 / 3.0)));
    }

    #[test]
    fn kannan_zero_is_clamped() {
        let p = from_kannan(KannanParams::new(0.0, 0.0).unwrap());
        assert_eq!(triple(p), (0.0, THETA_FLOOR, 0.0));
        assert!(p.theta_clamped());
    }

    #[test]
    fn chatterjea_substitution() {
        let c = |k, b| triple(from_chatterjea(ChatterjeaParams::new(k, b).unwrap()));
        assert!(close(c(1.0, 1.0 / 3.0), (1.0, 0.5, 1.0)));
        assert!(close(c(0.0, 0.25), (0.0, 1.0 / 3.0, 2.0 / 3.0)));
        assert!(close(c(3.0, 0.4), (3.0, 2.0 / 3.0, 4.0 / 3.0)));
    }

    #[test]
    fn bianchini_substitution() {
        let b = |k, h| triple(from_bianchini(BianchiniParams::new(k, h).unwrap()));
        assert_eq!(b(1.0, 0.5), (1.0, 0.5, 1.0));
        assert_eq!(b(0.0, 0.9), (0.0, 0.9, 1.8));
        assert_eq!(b(5.0, 0.99), (5.0, 0.99, 1.98));
    }

    #[test]
    fn sound_constants() {
        let p = sound_from_kannan(KannanParams::new(2.0, 1.0 / 3.0).unwrap());
        assert!(close(triple(p), (2.0, 1.5, 1.0)));
        assert!((p.delta() - 0.5).abs() < 1e-15);
        let p = sound_from_bianchini(BianchiniParams::new(0.0, 0.75).unwrap());
        assert!(close(triple(p), (0.0, 0.75, 3.0)));
    }

    #[test]
    fn invariants_enforced() {
        assert!(EnrichedAlmostParams::new(1.0, 2.0, 0.0).is_err());
        assert!(EnrichedAlmostParams::new(1.0, 0.0, 0.0).is_err());
        assert!(EnrichedAlmostParams::new(-1.0, 0.5, 0.0).is_err());
        assert!(EnrichedAlmostParams::new(0.0, 0.5, -1.0).is_err());
        assert!(KannanParams::new(0.0, 0.5).is_err());
        assert!(ChatterjeaParams::new(0.0, 0.5).is_err());
        assert!(BianchiniParams::new(0.0, 1.0).is_err());
        assert!(UniquenessParams::new(1.0, 0.0).is_err());
        let p = EnrichedAlmostParams::new(3.0, 2.0, 1.0).unwrap();
        assert_eq!(p.delta(), 0.5);
        assert_eq!(p.lambda(), 0.25);
    }

    #[test]
    fn json_field_names() {
        let p = EnrichedAlmostParams::new(1.0, 1.0, 3.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"b":1.0,"theta":1.0,"L":3.0}"#);
        let back: EnrichedAlmostParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(
            serde_json::from_str::<EnrichedAlmostParams>(r#"{"b":0,"theta":1,"L":0}"#).is_err()
        );
    }
}
