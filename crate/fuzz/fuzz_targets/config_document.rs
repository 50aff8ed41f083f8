//! Fuzz the flat key = value config parser: arbitrary input must produce
//! a clean parse or a typed error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use tippool::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::from_document(text) {
        // A document that parsed must echo back valid, and validation must
        // be stable under re-checking.
        assert!(config.validate().is_ok());
        assert!(config.model_params().is_ok());
    }
});
