#![no_main]

use fracdigit_core::cache::{decode, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((key, values)) = decode(data) {
        // anything accepted is canonical
        assert_eq!(encode(&key, &values), data);
    }
});
