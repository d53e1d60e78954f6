#![no_main]

use libfuzzer_sys::fuzz_target;
use photonic_hopfield::harness::RunConfig;

fuzz_target!(|text: &str| {
    if let Ok(cfg) = RunConfig::from_toml(text) {
        let serialized = cfg.to_toml().expect("valid config serializes");
        let again = RunConfig::from_toml(&serialized).expect("serialized config reparses");
        assert_eq!(cfg, again);
    }
});
