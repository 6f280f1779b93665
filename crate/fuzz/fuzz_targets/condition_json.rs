#![no_main]

use fpkit_core::contract::{Condition, ParamGrid, SamplingPlan};
use fpkit_core::iterate::StoppingRule;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 64 * 1024 {
        return;
    }
    let _ = serde_json::from_slice::<Condition>(data);
    if let Ok(plan) = serde_json::from_slice::<SamplingPlan>(data) {
        let _ = plan.validate();
    }
    if let Ok(grid) = serde_json::from_slice::<ParamGrid>(data) {
        if grid.validate().is_ok() && grid.b.len() * grid.theta.len() * grid.l.len() < 10_000 {
            let _ = grid.valid_triples();
        }
    }
    if let Ok(rule) = serde_json::from_slice::<StoppingRule>(data) {
        let _ = rule.validate();
    }
});
