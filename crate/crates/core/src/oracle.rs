//! Reference implementations that share no code path with the production
//! evaluators. They are slow and exist to cross-check results, both in the
//! test suite and in the `validate` command.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{ConfigurationSpace, SpinConfiguration};
use crate::matrix::ComplexMatrix;

/// Permanent by direct summation over all `n!` permutations.
pub fn leibniz_permanent(a: &ComplexMatrix) -> Result<Complex64> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::Dimension("Leibniz permanent needs a non-empty square matrix".into()));
    }
    let n = a.rows();
    if n > 10 {
        return Err(Error::InvalidParameter("Leibniz expansion limited to n <= 10".into()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = Complex64::new(0.0, 0.0);
    heap_permutations(n, &mut perm, &mut |p| {
        total += p
            .iter()
            .enumerate()
            .fold(Complex64::new(1.0, 0.0), |acc, (i, &j)| acc * a[(i, j)]);
    });
    Ok(total)
}

fn heap_permutations(k: usize, perm: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        visit(perm);
        return;
    }
    for i in 0..k - 1 {
        heap_permutations(k - 1, perm, visit);
        if k.is_multiple_of(2) {
            perm.swap(i, k - 1);
        } else {
            perm.swap(0, k - 1);
        }
    }
    heap_permutations(k - 1, perm, visit);
}

fn factorial_product(occupations: &[usize]) -> f64 {
    occupations
        .iter()
        .map(|&n| (1..=n).map(|v| v as f64).product::<f64>())
        .product()
}

/// Action of the single-particle unitary `u` on the symmetric `n`-photon
/// space, obtained by expanding `prod_i a^dag_{x_i}` with
/// `a^dag_j -> sum_k u[k, j] a^dag_k` and collecting normal-ordered
/// monomials. Entry `(k, x)` is `<k| U |x>` in the ordinals of `space`.
pub fn fock_transfer_matrix(u: &ComplexMatrix, space: &ConfigurationSpace) -> Result<ComplexMatrix> {
    let m = space.modes();
    if u.rows() != m || u.cols() != m {
        return Err(Error::Dimension(format!(
            "{}x{} matrix for a {m}-mode space",
            u.rows(),
            u.cols()
        )));
    }
    let n = space.photons();
    let dim = space.len();
    let mut out = ComplexMatrix::zeros(dim, dim);
    let mut tuple = vec![0usize; n];
    let mut sorted = vec![0usize; n];
    for (xo, x) in space.configs().iter().enumerate() {
        let xs = x.modes();
        let in_norm = factorial_product(&x.occupations()).sqrt();
        tuple.iter_mut().for_each(|t| *t = 0);
        loop {
            let coeff = tuple
                .iter()
                .zip(xs)
                .fold(Complex64::new(1.0, 0.0), |acc, (&k, &xi)| acc * u[(k, xi)]);
            sorted.copy_from_slice(&tuple);
            sorted.sort_unstable();
            let k = crate::fock::PhotonConfiguration::from_sorted_zero_based(sorted.clone());
            let ko = space.index_of(&k).expect("sorted tuple is a configuration");
            // a^dag_{k1} ... a^dag_{kn} |0> = sqrt(prod n_k!) |k>
            let out_norm = factorial_product(&k.occupations()).sqrt();
            out[(ko, xo)] += coeff * (out_norm / in_norm);
            // odometer over [m]^n
            let mut pos = 0;
            while pos < n {
                tuple[pos] += 1;
                if tuple[pos] < m {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
    }
    Ok(out)
}

/// Dense state-vector route to the output distribution: prepare the
/// injected Fock state with `prep`, imprint the spin phases, evolve with `s`.
pub fn state_vector_distribution(
    s: &ComplexMatrix,
    prep: &ComplexMatrix,
    injection_ordinal: usize,
    sigma: &SpinConfiguration,
    space: &ConfigurationSpace,
) -> Result<Vec<f64>> {
    let amplitudes = state_vector_amplitudes(s, prep, injection_ordinal, sigma, space)?;
    Ok(amplitudes.iter().map(|z| z.norm_sqr()).collect())
}

/// Output amplitudes `<k| S Phi(sigma) P |injection>` for every `k`.
pub fn state_vector_amplitudes(
    s: &ComplexMatrix,
    prep: &ComplexMatrix,
    injection_ordinal: usize,
    sigma: &SpinConfiguration,
    space: &ConfigurationSpace,
) -> Result<Vec<Complex64>> {
    if sigma.len() != space.modes() {
        return Err(Error::Dimension("spin layer length differs from mode count".into()));
    }
    let tp = fock_transfer_matrix(prep, space)?;
    let ts = fock_transfer_matrix(s, space)?;
    let dim = space.len();
    let psi0: Vec<Complex64> = (0..dim).map(|x| tp[(x, injection_ordinal)]).collect();
    let phased: Vec<Complex64> = space
        .configs()
        .iter()
        .zip(&psi0)
        .map(|(x, a)| a * sigma.product_over(x))
        .collect();
    Ok((0..dim)
        .map(|k| (0..dim).map(|x| ts[(k, x)] * phased[x]).sum())
        .collect())
}

/// `m_k = sum_x X_x prod_i sigma_{x_i}` by explicit loops, with the pattern
/// `X_x = <k|S|x> <x|P|injection>` taken from the transfer matrices.
pub fn naive_magnetization(
    s: &ComplexMatrix,
    prep: &ComplexMatrix,
    injection_ordinal: usize,
    sigma: &SpinConfiguration,
    space: &ConfigurationSpace,
    k: usize,
) -> Result<Complex64> {
    if sigma.len() != space.modes() {
        return Err(Error::Dimension("spin layer length differs from mode count".into()));
    }
    let ts = fock_transfer_matrix(s, space)?;
    let tp = fock_transfer_matrix(prep, space)?;
    let mut m = Complex64::new(0.0, 0.0);
    for (x, cfg) in space.configs().iter().enumerate() {
        let mut sign = 1.0;
        for &mode in cfg.modes() {
            sign *= f64::from(sigma.as_slice()[mode]);
        }
        m += ts[(k, x)] * tp[(x, injection_ordinal)] * sign;
    }
    Ok(m)
}

/// Boltzmann law `exp(M P_K(sigma) / T) / Z` over all `2^M` spin codes,
/// with `P_K` from the state-vector route.
pub fn boltzmann_distribution(
    s: &ComplexMatrix,
    prep: &ComplexMatrix,
    injection_ordinal: usize,
    space: &ConfigurationSpace,
    targets: &[usize],
    temperature: f64,
) -> Result<Vec<f64>> {
    let m = space.modes();
    if m > 16 || temperature <= 0.0 {
        return Err(Error::InvalidParameter("Boltzmann oracle needs M <= 16 and T > 0".into()));
    }
    let energies = (0..1u64 << m)
        .map(|code| {
            let sigma = SpinConfiguration::from_code(code, m);
            let p = state_vector_distribution(s, prep, injection_ordinal, &sigma, space)?;
            Ok(-(m as f64) * targets.iter().map(|&k| p[k]).sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-(e - e0) / temperature).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / z).collect())
}
