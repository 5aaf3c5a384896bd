#![no_main]

use libfuzzer_sys::fuzz_target;
use psa_core::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let canonical = cfg.to_canonical();
        let back = ExperimentConfig::parse(&canonical).expect("canonical form loads");
        assert_eq!(back, cfg);
    }
});
