#![no_main]

use libfuzzer_sys::fuzz_target;
use photonic_hopfield::fock::PhotonConfiguration;

fuzz_target!(|text: &str| {
    if let Ok(x) = text.parse::<PhotonConfiguration>() {
        let again: PhotonConfiguration = x.to_string().parse().expect("display form reparses");
        assert_eq!(x, again);
        assert_eq!(x.occupations().iter().sum::<usize>(), x.n_photons());
    }
});
