#![no_main]
use libfuzzer_sys::fuzz_target;
use securecast::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = ExperimentConfig::from_toml(text) {
        config.validate().expect("parsed configs are valid");
    }
});
