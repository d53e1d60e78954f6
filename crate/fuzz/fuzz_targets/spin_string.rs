#![no_main]

use libfuzzer_sys::fuzz_target;
use photonic_hopfield::fock::SpinConfiguration;

fuzz_target!(|text: &str| {
    if let Ok(sigma) = text.parse::<SpinConfiguration>() {
        let again: SpinConfiguration = sigma.to_string().parse().expect("display form reparses");
        assert_eq!(sigma, again);
        if sigma.len() <= 64 {
            assert_eq!(SpinConfiguration::from_code(sigma.code(), sigma.len()), sigma);
        }
    }
});
