#![no_main]

use fracdigit_core::{DataModel, StreamRng};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = text.parse::<DataModel>() {
        let again: DataModel = model.to_string().parse().expect("display parses back");
        assert_eq!(again.to_string(), model.to_string());
        let sample = model.sample(16, &mut StreamRng::new(1)).expect("validated model samples");
        assert!(sample.iter().all(|s| (1.0..10.0).contains(s)));
    }
});
