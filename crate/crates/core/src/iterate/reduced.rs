use crate::contract::{
    CertificationReport, Certifier, Condition, EnrichedAlmostParams, SamplingPlan,
};
use crate::error::Result;
use crate::space::MapDescriptor;

/// `λ = 1/(b+1)`, the averaging weight that turns an enriched almost
/// contraction into an almost contraction.
pub fn canonical_lambda(p: &EnrichedAlmostParams) -> f64 {
    p.lambda()
}

/// `δ = θ/(b+1)`, the almost-contraction factor of the averaged map.
pub fn reduced_delta(p: &EnrichedAlmostParams) -> f64 {
    p.delta()
}

/// Sample `‖T_λx − T_λy‖ ≤ δ‖x−y‖ + L‖T_λx − y‖` for the canonical `λ` and `δ`.
///
/// The inequality is the enriched condition multiplied by `λ`, so both checks
/// must agree pair by pair; the inconclusive band is scaled accordingly.
pub fn reduced_condition_check(
    map: &MapDescriptor,
    p: &EnrichedAlmostParams,
    plan: &SamplingPlan,
) -> Result<CertificationReport> {
    let cert = Certifier::averaged(map, canonical_lambda(p), plan)?;
    let mut rep = cert.check(&Condition::almost(reduced_delta(p), p.l())?)?;
    rep.notes.push(format!(
        "averaged map with lambda = {}, delta = {}",
        canonical_lambda(p),
        reduced_delta(p)
    ));
    Ok(rep)
}
