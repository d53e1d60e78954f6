#![no_main]

use libfuzzer_sys::fuzz_target;
use photonic_hopfield::harness::matrix_io::{format_complex_matrix, parse_complex_matrix, parse_unitary};

fuzz_target!(|text: &str| {
    if let Ok(m) = parse_complex_matrix(text) {
        let again = parse_complex_matrix(&format_complex_matrix(&m)).expect("formatted matrix reparses");
        assert_eq!(m.rows(), again.rows());
        assert_eq!(m.cols(), again.cols());
        for (a, b) in m.as_slice().iter().zip(again.as_slice()) {
            assert_eq!(a, b);
        }
    }
    let _ = parse_unitary(text);
});
