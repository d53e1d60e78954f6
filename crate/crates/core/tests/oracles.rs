use num_complex::Complex64;

use photonic_hopfield::analysis::{magnetization, target_magnetizations};
use photonic_hopfield::fock::{PhotonConfiguration, SpinConfiguration, TargetSet};
use photonic_hopfield::matrix::{dft_matrix, haar_random_unitary, hadamard_row_unitary, UnitarySpec};
use photonic_hopfield::model::{
    sample_counts_seeded, empirical_distribution, total_variation_distance, PhotonicModel, ScatteringSpec,
};
use photonic_hopfield::oracle;
use photonic_hopfield::seed::{derive_rng, derive_seed};

fn bunched_model(s: UnitarySpec) -> PhotonicModel {
    let m = s.modes();
    let spec = ScatteringSpec::new(s, dft_matrix(m).unwrap(), PhotonConfiguration::bunched(1, 2, m).unwrap()).unwrap();
    PhotonicModel::new(spec).unwrap()
}

#[test]
fn six_mode_distribution_matches_state_vector() {
    for i in 0..5u64 {
        let s = haar_random_unitary(6, derive_seed(1, "oracle-s", &[i])).unwrap();
        let model = bunched_model(s.clone());
        let space = model.space();
        assert_eq!(space.len(), 21);
        let inj = space.require(&PhotonConfiguration::bunched(1, 2, 6).unwrap()).unwrap();
        let prep = dft_matrix(6).unwrap();
        let mut rng = derive_rng(1, "oracle-spins", &[i]);
        for _ in 0..10 {
            let sigma = SpinConfiguration::random(6, &mut rng);
            let got = model.output_distribution(&sigma).unwrap();
            let want = oracle::state_vector_distribution(s.matrix(), prep.matrix(), inj, &sigma, space).unwrap();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn three_photon_distribution_matches_state_vector() {
    let s = haar_random_unitary(4, 99).unwrap();
    let inj = PhotonConfiguration::new(&[1, 1, 3], 4).unwrap();
    let spec = ScatteringSpec::new(s.clone(), dft_matrix(4).unwrap(), inj.clone()).unwrap();
    let model = PhotonicModel::new(spec).unwrap();
    let space = model.space();
    let prep = dft_matrix(4).unwrap();
    for code in 0..16 {
        let sigma = SpinConfiguration::from_code(code, 4);
        let got = model.output_distribution(&sigma).unwrap();
        let want = oracle::state_vector_distribution(
            s.matrix(),
            prep.matrix(),
            space.require(&inj).unwrap(),
            &sigma,
            space,
        )
        .unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn magnetization_matches_direct_summation() {
    let s = haar_random_unitary(6, 5).unwrap();
    let model = bunched_model(s.clone());
    let space = model.space();
    let full = TargetSet::full(space);
    let tensor = model.pattern_tensor(&full).unwrap();
    let prep = dft_matrix(6).unwrap();
    let inj = space.require(&PhotonConfiguration::bunched(1, 2, 6).unwrap()).unwrap();
    let mut rng = derive_rng(5, "magnetization", &[]);
    for _ in 0..10 {
        let sigma = SpinConfiguration::random(6, &mut rng);
        let production = target_magnetizations(&model, &sigma, &full).unwrap();
        for (k, prod) in production.iter().enumerate() {
            let naive = oracle::naive_magnetization(s.matrix(), prep.matrix(), inj, &sigma, space, k).unwrap();
            assert!((prod.norm() - naive.norm()).abs() < 1e-12);
            assert!((magnetization(&sigma, &tensor, space, k).unwrap() - naive).norm() < 1e-12);
        }
    }
}

fn hadamard_rows() -> Vec<Vec<i8>> {
    vec![vec![1; 10], [vec![1; 5], vec![-1; 5]].concat()]
}

#[test]
fn hadamard_patterns_are_real_and_retrieve_exactly() {
    let s = hadamard_row_unitary(10, &hadamard_rows(), 3).unwrap();
    let model = bunched_model(s);
    let space = model.space();
    let k1 = PhotonConfiguration::bunched(1, 2, 10).unwrap();
    let k2 = PhotonConfiguration::bunched(2, 2, 10).unwrap();
    let targets = TargetSet::from_configs(space, &[k1, k2]).unwrap();
    let tensor = model.pattern_tensor(&targets).unwrap();
    for (_, pattern) in tensor.iter() {
        assert!(pattern.iter().all(|x| x.im.abs() < 1e-12));
    }
    for (row, want) in hadamard_rows().into_iter().zip([[1.0, 0.0], [0.0, 1.0]]) {
        let sigma = SpinConfiguration::new(row).unwrap();
        for sigma in [sigma.clone(), sigma.negated()] {
            let m = target_magnetizations(&model, &sigma, &targets).unwrap();
            for (mk, w) in m.iter().zip(want) {
                assert!((mk - Complex64::new(w, 0.0)).norm() < 1e-12, "{mk}");
            }
        }
    }
}

#[test]
fn shot_noise_tvd_bound_on_ten_modes() {
    let model = bunched_model(haar_random_unitary(10, 11).unwrap());
    assert_eq!(model.space().len(), 55);
    let mut rng = derive_rng(11, "shots-spins", &[]);
    let seeds = 200;
    let mut within = 0;
    for i in 0..seeds {
        let p = model.output_distribution(&SpinConfiguration::random(10, &mut rng)).unwrap();
        let counts = sample_counts_seeded(&p, 10_000, derive_seed(11, "shots", &[i])).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 10_000);
        if total_variation_distance(&empirical_distribution(&counts), &p).unwrap() < 0.06 {
            within += 1;
        }
    }
    assert!(within as f64 >= 0.95 * seeds as f64, "{within}/{seeds}");
}
