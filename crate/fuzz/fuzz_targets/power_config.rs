#![no_main]

use fracdigit_cli::study::PowerStudyConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = PowerStudyConfig::from_toml(text) {
        assert!(!cfg.cells().expect("validated").is_empty());
        assert!(!cfg.stat_ids().expect("validated").is_empty());
    }
});
