#![no_main]

use fracdigit_core::significand::DEFAULT_MAX_DIGITS;
use fracdigit_core::{read_records, TruncationProfile};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_records(data, DEFAULT_MAX_DIGITS) {
        let profile = TruncationProfile::from_records(&records, DEFAULT_MAX_DIGITS);
        assert_eq!(profile.n, records.len());
        assert_eq!(profile.pattern.len(), records.len());
    }
});
