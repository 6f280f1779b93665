//! Arbitrary text through the TOML config parser and validator.

#![no_main]

use fpkit::{parse_config, Encoding};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 64 * 1024 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text, Encoding::Toml) {
        // A config that validated once must validate again after a JSON roundtrip.
        let json = serde_json::to_string(&cfg).unwrap();
        let back = parse_config(&json, Encoding::Json).unwrap();
        assert_eq!(back, cfg);
    }
});
