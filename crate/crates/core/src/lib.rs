//! Fixed-point toolkit for enriched almost contractions.
//!
//! A map `T` on a normed space is an *enriched `(b, θ, L)`-almost contraction*
//! when
//!
//! ```text
//! ‖b(x−y) + Tx − Ty‖ ≤ θ‖x−y‖ + L‖b(x−y) + Tx − y‖     for all x, y
//! ```
//!
//! with `b ≥ 0`, `0 < θ < b + 1` and `L ≥ 0`. Such a map need not have a
//! convergent Picard iteration, but its averaged operator
//! `T_λ = (1−λ)I + λT` with `λ = 1/(b+1)` is an almost contraction with factor
//! `δ = θ/(b+1)`, so the Krasnoselskij iteration converges to a fixed point
//! and obeys computable a priori and a posteriori error bounds.
//!
//! The crate is organised as:
//!
//! * [`space`] – points, the Euclidean metric, map descriptors and the map gallery.
//! * [`contract`] – parameter types, class conversions and the sampled certifier.
//! * [`iterate`] – Picard / Krasnoselskij engines, error bounds and rate checks.
//! * [`vip`] – convex sets with exact projections and the projected solver for
//!   variational inequalities.
//!
//! Finite-dimensional real space with the Euclidean norm is used throughout.

pub mod contract;
pub mod error;
pub mod iterate;
pub mod space;
pub mod vip;

pub use error::{Error, Result};
pub use space::{MapDescriptor, MapKind, Point};
pub use vip::ConvexSet;

/// Absolute tolerance used when deciding whether a point lies in a map's domain.
/// Points within this distance outside are clamped onto the boundary.
pub const TAU_DOM: f64 = 1e-9;

/// Absolute tolerance for "is a fixed point" decisions.
pub const TAU_FIX: f64 = 1e-9;

/// Width of the band around zero margin in which a certification is inconclusive.
pub const TAU_MARGIN: f64 = 1e-10;

/// Two iterates closer than this are considered the same point for cycle detection.
pub const TAU_CYCLE: f64 = 1e-10;

/// Tolerance on the sampled variational inequality `⟨G(x*), c − x*⟩ ≥ −τ`.
pub const TAU_VIP: f64 = 1e-7;
