//! Contraction classes: parameter types, conversions and the sampled certifier.

mod certify;
mod params;
mod sampling;
mod search;

pub use certify::{
    check_almost, check_enriched_almost, check_uniqueness_condition, CertificationReport,
    Certifier, Condition, PairEvaluation, Verdict,
};
pub use params::{
    from_bianchini, from_chatterjea, from_kannan, sound_from_bianchini, sound_from_chatterjea,
    sound_from_kannan, BianchiniParams, ChatterjeaParams, EnrichedAlmostParams, KannanParams,
    UniquenessParams, THETA_FLOOR,
};
pub(crate) use sampling::sample_points;
pub use sampling::{SamplingPlan, MAX_GRID_PAIRS};
pub use search::{search_params, ParamGrid};
