#![no_main]
use libfuzzer_sys::fuzz_target;
use nibble_match::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<ExperimentConfig>(data) {
        let _ = cfg.validate();
    }
});
