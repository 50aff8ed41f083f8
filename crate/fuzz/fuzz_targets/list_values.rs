//! Fuzz the list-valued config fields: the fractions list/range syntax and
//! the delay:parents:fraction class triples.

#![no_main]

use libfuzzer_sys::fuzz_target;
use tippool::config::{parse_classes, parse_fractions};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(fractions) = parse_fractions("fractions", text) {
        // The range form is capped; comma lists are bounded by the input.
        assert!(fractions.len() <= text.len().max(10_000));
    }
    let _ = parse_classes("classes", text);
});
