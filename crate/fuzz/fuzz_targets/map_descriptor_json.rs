//! Decodes maps, sets and points; anything that decodes must evaluate without panicking.

#![no_main]

use fpkit_core::{ConvexSet, MapDescriptor, Point};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 64 * 1024 {
        return;
    }
    if let Ok(map) = serde_json::from_slice::<MapDescriptor>(data) {
        if let Some((lo, _)) = map.domain().bounds() {
            if let Ok(x) = Point::new(lo) {
                let _ = map.evaluate(&x);
            }
        }
        let _ = serde_json::to_string(&map).unwrap();
    }
    if let Ok(set) = serde_json::from_slice::<ConvexSet>(data) {
        let x = Point::new(vec![0.5; set.dim()]).unwrap();
        if let Ok(p) = set.project(&x) {
            assert!(set.contains(p.coords(), 1e-6));
        }
    }
    let _ = serde_json::from_slice::<Point>(data);
});
