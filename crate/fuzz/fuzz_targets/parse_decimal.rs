#![no_main]

use fracdigit_core::{parse_decimal, DigitCount};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for max_digits in [1, 6, 15] {
        if let Ok(rec) = parse_decimal(text, max_digits) {
            assert!((1.0..10.0).contains(&rec.significand), "{text:?} -> {}", rec.significand);
            if let DigitCount::Exact(k) = rec.digit_count {
                assert!(k >= 1 && k <= max_digits);
            }
        }
    }
});
