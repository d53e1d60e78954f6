//! Replays the checked-in fuzz corpus through the same round-trip checks the
//! fuzz targets perform.

use std::fs;
use std::path::PathBuf;

use photonic_hopfield::fock::{PhotonConfiguration, SpinConfiguration};
use photonic_hopfield::harness::matrix_io::{format_complex_matrix, parse_complex_matrix, parse_unitary};
use photonic_hopfield::harness::RunConfig;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn matrix_text_seeds() {
    let mut accepted = Vec::new();
    for (name, text) in seeds("matrix_text") {
        if let Ok(m) = parse_complex_matrix(&text) {
            let again = parse_complex_matrix(&format_complex_matrix(&m)).unwrap();
            assert_eq!(m.as_slice(), again.as_slice(), "{name}");
            accepted.push(name);
        }
        let _ = parse_unitary(&text);
    }
    assert_eq!(accepted, ["dft2_comment", "identity2", "rect"]);
    assert!(parse_unitary(&seeds("matrix_text")[0].1).is_ok());
}

#[test]
fn run_config_seeds() {
    let mut accepted = Vec::new();
    for (name, text) in seeds("run_config") {
        if let Ok(cfg) = RunConfig::from_toml(&text) {
            let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(cfg, again, "{name}");
            accepted.push(name);
        }
    }
    assert_eq!(accepted, ["full.toml", "hadamard.toml", "minimal.toml"]);
}

#[test]
fn spin_string_seeds() {
    let mut accepted = Vec::new();
    for (name, text) in seeds("spin_string") {
        if let Ok(sigma) = text.parse::<SpinConfiguration>() {
            let again: SpinConfiguration = sigma.to_string().parse().unwrap();
            assert_eq!(sigma, again, "{name}");
            if sigma.len() <= 64 {
                assert_eq!(SpinConfiguration::from_code(sigma.code(), sigma.len()), sigma);
            }
            accepted.push(name);
        }
    }
    assert_eq!(accepted, ["comma", "compact", "long", "spaced"]);
}

#[test]
fn photon_config_seeds() {
    let mut accepted = Vec::new();
    for (name, text) in seeds("photon_config") {
        if let Ok(x) = text.parse::<PhotonConfiguration>() {
            let again: PhotonConfiguration = x.to_string().parse().unwrap();
            assert_eq!(x, again, "{name}");
            accepted.push(name);
        }
    }
    assert_eq!(accepted, ["bunched", "huge", "paren"]);
}
