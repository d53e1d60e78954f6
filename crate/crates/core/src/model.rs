//! Photonic Hopfield mapping.
//!
//! A prepared `n_ph`-photon state passes a layer of `{0, pi}` phase shifters
//! (the spins) and a scattering unitary `S`. The probability of landing in a
//! target set `K` of output configurations, scaled by `-M`, is the energy of
//! the spin configuration.
//!
//! Amplitudes are available through two independent routes:
//!
//! * the configuration sum `sum_x a_x Perm(S_{k|x}) / sqrt(mu(x) mu(k)) prod_i sigma_{x_i}`,
//!   equivalently the pattern tensors `X^{(k)}`;
//! * one permanent of the composed single-photon matrix `S diag(sigma) P`
//!   restricted to the injection modes.
//!
//! The second is the production route; the first validates it.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{spin_product, ConfigurationSpace, PhotonConfiguration, SpinConfiguration, TargetSet};
use crate::matrix::{dft_matrix, permanent_row_major, submatrix, UnitarySpec};
use crate::seed::rng_from_seed;

/// Tolerance on `sum_x |a_x|^2 = 1`.
pub const INPUT_NORM_TOLERANCE: f64 = 1e-10;

/// How an input state was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum InputProvenance {
    Prepared {
        injection: PhotonConfiguration,
    },
    Explicit,
}

/// Amplitudes `a_x` of the input state over configuration ordinals.
#[derive(Debug, Clone, PartialEq)]
pub struct InputState {
    amplitudes: Vec<Complex64>,
    provenance: InputProvenance,
}

impl InputState {
    pub fn explicit(space: &ConfigurationSpace, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a space of {}",
                amplitudes.len(),
                space.len()
            )));
        }
        check_norm(&amplitudes)?;
        Ok(Self {
            amplitudes,
            provenance: InputProvenance::Explicit,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn provenance(&self) -> &InputProvenance {
        &self.provenance
    }
}

fn check_norm(amplitudes: &[Complex64]) -> Result<()> {
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > INPUT_NORM_TOLERANCE {
        return Err(invalid(format!(
            "input state norm {norm:.12} differs from 1; the multiplicity convention is inconsistent"
        )));
    }
    Ok(())
}

/// `a_x = Perm(P_{x|injection}) / sqrt(mu(injection) mu(x))`.
pub fn prepare_input(
    prep: &UnitarySpec,
    injection: &PhotonConfiguration,
    space: &ConfigurationSpace,
) -> Result<InputState> {
    let amplitudes = input_amplitudes_unchecked(prep, injection, space)?;
    check_norm(&amplitudes)?;
    Ok(InputState {
        amplitudes,
        provenance: InputProvenance::Prepared {
            injection: injection.clone(),
        },
    })
}

/// The amplitudes of [`prepare_input`] without the normalization check.
pub fn input_amplitudes_unchecked(
    prep: &UnitarySpec,
    injection: &PhotonConfiguration,
    space: &ConfigurationSpace,
) -> Result<Vec<Complex64>> {
    if prep.modes() != space.modes() {
        return Err(Error::Dimension(format!(
            "{}-mode preparation for a {}-mode space",
            prep.modes(),
            space.modes()
        )));
    }
    let inj = space.require(injection)?;
    let mu_inj = space.multiplicity(inj) as f64;
    let n = space.photons();
    space
        .configs()
        .iter()
        .enumerate()
        .map(|(xo, x)| {
            let block = submatrix(prep.matrix(), x, injection)?;
            let norm = (mu_inj * space.multiplicity(xo) as f64).sqrt();
            Ok(permanent_row_major(n, block.as_slice()) / norm)
        })
        .collect()
}

/// Preparation unitary used by generated experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepKind {
    /// Discrete Fourier transform: equal single-photon amplitude in every mode.
    #[default]
    Dft,
    Identity,
}

impl PrepKind {
    pub fn build(self, m: usize) -> Result<UnitarySpec> {
        match self {
            PrepKind::Dft => dft_matrix(m),
            PrepKind::Identity => UnitarySpec::identity(m),
        }
    }
}

/// Quenched disorder and preparation: scattering unitary `S`, preparation
/// unitary `P` and the injected Fock configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSpec {
    scattering: UnitarySpec,
    prep: UnitarySpec,
    injection: PhotonConfiguration,
}

impl ScatteringSpec {
    pub fn new(scattering: UnitarySpec, prep: UnitarySpec, injection: PhotonConfiguration) -> Result<Self> {
        if scattering.modes() != prep.modes() {
            return Err(Error::Dimension(format!(
                "scattering is {}-mode but preparation is {}-mode",
                scattering.modes(),
                prep.modes()
            )));
        }
        injection.check_modes(scattering.modes())?;
        Ok(Self {
            scattering,
            prep,
            injection,
        })
    }

    pub fn scattering(&self) -> &UnitarySpec {
        &self.scattering
    }

    pub fn prep(&self) -> &UnitarySpec {
        &self.prep
    }

    pub fn injection(&self) -> &PhotonConfiguration {
        &self.injection
    }

    pub fn modes(&self) -> usize {
        self.scattering.modes()
    }

    pub fn photons(&self) -> usize {
        self.injection.n_photons()
    }
}

/// Memory patterns `X^{(k)}_x = a_x / sqrt(mu(x)) * Perm(S_{k|x}) / sqrt(mu(k))`
/// for each `k` in a target set.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternTensor {
    targets: Vec<usize>,
    patterns: Vec<Vec<Complex64>>,
}

impl PatternTensor {
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Pattern of the target with ordinal `k`, if `k` is a target.
    pub fn pattern(&self, k: usize) -> Option<&[Complex64]> {
        self.targets
            .binary_search(&k)
            .ok()
            .map(|i| self.patterns[i].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[Complex64])> {
        self.targets
            .iter()
            .copied()
            .zip(self.patterns.iter().map(|p| p.as_slice()))
    }

    /// `sum_x X^{(k)}_x prod_i sigma_{x_i}`.
    pub fn contract(&self, space: &ConfigurationSpace, sigma: &[i8], k: usize) -> Option<Complex64> {
        let pattern = self.pattern(k)?;
        Some(contract(space, pattern, sigma))
    }
}

fn contract(space: &ConfigurationSpace, pattern: &[Complex64], sigma: &[i8]) -> Complex64 {
    space
        .configs()
        .iter()
        .zip(pattern)
        .map(|(x, &v)| v * spin_product(sigma, x))
        .sum()
}

/// Couplings `J(x, y) = sum_k X^{(k)}_x conj(X^{(k)}_y)`, row-major over ordinals.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapticTensor {
    dim: usize,
    data: Vec<Complex64>,
}

impl SynapticTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[x * self.dim + y]
    }

    /// `max |J(x,y) - conj(J(y,x))|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..self.dim {
            for y in 0..=x {
                worst = worst.max((self.get(x, y) - self.get(y, x).conj()).norm());
            }
        }
        worst
    }

    /// `sum_{x,y} J(x,y) prod sigma_x prod sigma_y`; real up to rounding.
    pub fn quadratic_form(&self, space: &ConfigurationSpace, sigma: &SpinConfiguration) -> Complex64 {
        let s: Vec<f64> = space.configs().iter().map(|x| sigma.product_over(x)).collect();
        let mut total = Complex64::new(0.0, 0.0);
        for x in 0..self.dim {
            let row = &self.data[x * self.dim..(x + 1) * self.dim];
            let inner: Complex64 = row.iter().zip(&s).map(|(j, sy)| j * sy).sum();
            total += inner * s[x];
        }
        total
    }
}

/// `J(x, y) = sum_k X^{(k)}_x conj(X^{(k)}_y)`.
pub fn synaptic_tensor(patterns: &PatternTensor) -> SynapticTensor {
    let dim = patterns.patterns.first().map_or(0, |p| p.len());
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for p in &patterns.patterns {
        for x in 0..dim {
            if p[x] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for y in 0..dim {
                data[x * dim + y] += p[x] * p[y].conj();
            }
        }
    }
    SynapticTensor { dim, data }
}

/// Everything needed to evaluate amplitudes for arbitrary spin layers.
#[derive(Debug, Clone)]
pub struct PhotonicModel {
    space: ConfigurationSpace,
    spec: ScatteringSpec,
    input: InputState,
    composed: bool,
}

impl PhotonicModel {
    /// Enumerates the configuration space and prepares the input state from
    /// the scattering setup's preparation unitary and injection.
    pub fn new(spec: ScatteringSpec) -> Result<Self> {
        let space = ConfigurationSpace::enumerate(spec.modes(), spec.photons())?;
        Self::with_space(spec, space)
    }

    /// Like [`PhotonicModel::new`] but with a caller-built space (for example
    /// one using a different multiplicity convention).
    pub fn with_space(spec: ScatteringSpec, space: ConfigurationSpace) -> Result<Self> {
        check_space(&spec, &space)?;
        let input = prepare_input(&spec.prep, &spec.injection, &space)?;
        Ok(Self {
            space,
            spec,
            input,
            composed: true,
        })
    }

    /// Model driven by an arbitrary input state. The composed-matrix route is
    /// only available when the input was prepared from this spec.
    pub fn with_input(spec: ScatteringSpec, space: ConfigurationSpace, input: InputState) -> Result<Self> {
        check_space(&spec, &space)?;
        if input.amplitudes.len() != space.len() {
            return Err(Error::Dimension("input state does not match the space".into()));
        }
        let composed = matches!(&input.provenance,
            InputProvenance::Prepared { injection } if injection == &spec.injection)
            && prepare_input(&spec.prep, &spec.injection, &space).is_ok_and(|p| p == input);
        Ok(Self {
            space,
            spec,
            input,
            composed,
        })
    }

    pub fn space(&self) -> &ConfigurationSpace {
        &self.space
    }

    pub fn spec(&self) -> &ScatteringSpec {
        &self.spec
    }

    pub fn input(&self) -> &InputState {
        &self.input
    }

    pub fn modes(&self) -> usize {
        self.space.modes()
    }

    pub fn has_composed_route(&self) -> bool {
        self.composed
    }

    fn check_sigma(&self, sigma: &SpinConfiguration) -> Result<()> {
        if sigma.len() != self.modes() {
            return Err(Error::Dimension(format!(
                "{} spins for a {}-mode model",
                sigma.len(),
                self.modes()
            )));
        }
        Ok(())
    }

    fn check_ordinal(&self, k: usize) -> Result<()> {
        if k >= self.space.len() {
            return Err(Error::Dimension(format!(
                "output ordinal {k} outside a space of {}",
                self.space.len()
            )));
        }
        Ok(())
    }

    /// `<k|psi_{S,sigma}>` by the configuration sum.
    pub fn amplitude_sum(&self, sigma: &SpinConfiguration, k: usize) -> Result<Complex64> {
        self.check_sigma(sigma)?;
        self.check_ordinal(k)?;
        let kc = &self.space.configs()[k];
        let mu_k = self.space.multiplicity(k) as f64;
        let n = self.space.photons();
        let mut total = Complex64::new(0.0, 0.0);
        for (xo, x) in self.space.configs().iter().enumerate() {
            let a = self.input.amplitudes[xo];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let block = submatrix(self.spec.scattering.matrix(), kc, x)?;
            let perm = permanent_row_major(n, block.as_slice());
            let norm = (self.space.multiplicity(xo) as f64 * mu_k).sqrt();
            total += a * perm / norm * sigma.product_over(x);
        }
        Ok(total)
    }

    /// `<k|psi_{S,sigma}>` from one permanent of `S diag(sigma) P` on the
    /// injection columns.
    pub fn amplitude_composed(&self, sigma: &SpinConfiguration, k: usize) -> Result<Complex64> {
        self.check_sigma(sigma)?;
        self.check_ordinal(k)?;
        if !self.composed {
            return Err(invalid("composed route needs an input prepared from the scattering setup"));
        }
        let cols = self.injection_columns(sigma.as_slice());
        Ok(composed_amplitude(&cols, &self.space.configs()[k]) / self.composed_norm(k))
    }

    /// Production amplitude: composed route when available.
    pub fn amplitude(&self, sigma: &SpinConfiguration, k: usize) -> Result<Complex64> {
        if self.composed {
            self.amplitude_composed(sigma, k)
        } else {
            self.amplitude_sum(sigma, k)
        }
    }

    fn composed_norm(&self, k: usize) -> f64 {
        let inj = self.space.index_of(&self.spec.injection).expect("injection validated");
        (self.space.multiplicity(k) as f64 * self.space.multiplicity(inj) as f64).sqrt()
    }

    /// Columns `u_p = S diag(sigma) P[:, inj_p]`, one per photon.
    fn injection_columns(&self, sigma: &[i8]) -> Vec<Vec<Complex64>> {
        let m = self.modes();
        let s = self.spec.scattering.matrix();
        let p = self.spec.prep.matrix();
        self.spec
            .injection
            .modes()
            .iter()
            .map(|&j| {
                let v: Vec<Complex64> = (0..m).map(|x| p[(x, j)] * f64::from(sigma[x])).collect();
                (0..m)
                    .map(|k| (0..m).map(|x| s[(k, x)] * v[x]).sum())
                    .collect()
            })
            .collect()
    }

    /// `P(k) = |<k|psi>|^2` for every output configuration.
    pub fn output_distribution(&self, sigma: &SpinConfiguration) -> Result<Vec<f64>> {
        self.check_sigma(sigma)?;
        if self.composed {
            let cols = self.injection_columns(sigma.as_slice());
            Ok((0..self.space.len())
                .map(|k| (composed_amplitude(&cols, &self.space.configs()[k]) / self.composed_norm(k)).norm_sqr())
                .collect())
        } else {
            (0..self.space.len())
                .map(|k| self.amplitude_sum(sigma, k).map(|a| a.norm_sqr()))
                .collect()
        }
    }

    /// `P_S(sigma, K) = sum_{k in K} P(k)`. An empty `K` gives 0.
    pub fn target_probability(&self, sigma: &SpinConfiguration, targets: &TargetSet) -> Result<f64> {
        self.check_sigma(sigma)?;
        self.check_targets(targets)?;
        if targets.is_empty() {
            log::warn!("empty target set: probability is identically 0");
            return Ok(0.0);
        }
        targets
            .members()
            .iter()
            .map(|&k| self.amplitude(sigma, k).map(|a| a.norm_sqr()))
            .sum()
    }

    /// `H = -M P_S(sigma, K)`.
    pub fn energy(&self, sigma: &SpinConfiguration, targets: &TargetSet) -> Result<f64> {
        Ok(-(self.modes() as f64) * self.target_probability(sigma, targets)?)
    }

    fn check_targets(&self, targets: &TargetSet) -> Result<()> {
        match targets.members().last() {
            Some(&k) if k >= self.space.len() => Err(Error::Dimension(format!(
                "target ordinal {k} outside a space of {}",
                self.space.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Pattern tensors for every member of `targets`.
    pub fn pattern_tensor(&self, targets: &TargetSet) -> Result<PatternTensor> {
        self.check_targets(targets)?;
        let n = self.space.photons();
        let s = self.spec.scattering.matrix();
        let patterns = targets
            .members()
            .iter()
            .map(|&k| {
                let kc = &self.space.configs()[k];
                let mu_k = self.space.multiplicity(k) as f64;
                self.space
                    .configs()
                    .iter()
                    .enumerate()
                    .map(|(xo, x)| {
                        let a = self.input.amplitudes[xo];
                        let block = submatrix(s, kc, x)?;
                        let perm = permanent_row_major(n, block.as_slice());
                        let mu_x = self.space.multiplicity(xo) as f64;
                        Ok(a / mu_x.sqrt() * perm / mu_k.sqrt())
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PatternTensor {
            targets: targets.members().to_vec(),
            patterns,
        })
    }
}

fn check_space(spec: &ScatteringSpec, space: &ConfigurationSpace) -> Result<()> {
    if space.modes() != spec.modes() || space.photons() != spec.photons() {
        return Err(Error::Dimension(format!(
            "space is {} photons over {} modes, setup is {} over {}",
            space.photons(),
            space.modes(),
            spec.photons(),
            spec.modes()
        )));
    }
    Ok(())
}

/// `Perm(A)` with `A[i][p] = cols[p][k_i]`, without normalization.
fn composed_amplitude(cols: &[Vec<Complex64>], k: &PhotonConfiguration) -> Complex64 {
    let ks = k.modes();
    match ks.len() {
        1 => cols[0][ks[0]],
        2 => cols[0][ks[0]] * cols[1][ks[1]] + cols[1][ks[0]] * cols[0][ks[1]],
        n => {
            let mut block = Vec::with_capacity(n * n);
            for &ki in ks {
                for col in cols {
                    block.push(col[ki]);
                }
            }
            permanent_row_major(n, &block)
        }
    }
}

/// Incremental energy evaluation for Metropolis dynamics over a fixed
/// `(S, P, injection, K)`.
///
/// A flip of spin `i` changes every injection column by
/// `-2 sigma_i P[i, inj_p] S[:, i]`, so a proposal costs `O(M n_ph)` plus one
/// small permanent per target. Models without a composed route fall back to
/// cached pattern tensors.
#[derive(Debug, Clone)]
pub struct Landscape<'m> {
    model: &'m PhotonicModel,
    targets: TargetSet,
    norms: Vec<f64>,
    /// `P[i, inj_p]` per photon `p`, per mode `i`
    prep_rows: Vec<Vec<Complex64>>,
    /// `S[:, i]` per mode `i`
    s_cols: Vec<Vec<Complex64>>,
    /// used when the composed route is unavailable; holds every `k in C`
    patterns: Option<PatternTensor>,
}

/// Spin layer plus the cached quantities a [`Landscape`] needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeState {
    spins: SpinConfiguration,
    columns: Vec<Vec<Complex64>>,
}

impl LandscapeState {
    pub fn spins(&self) -> &SpinConfiguration {
        &self.spins
    }
}

impl<'m> Landscape<'m> {
    pub fn new(model: &'m PhotonicModel, targets: &TargetSet) -> Result<Self> {
        model.check_targets(targets)?;
        if targets.is_degenerate() {
            log::warn!(
                "target set with {} of {} configurations is degenerate: the energy is flat",
                targets.len(),
                model.space.len()
            );
        }
        let m = model.modes();
        let norms = (0..model.space.len())
            .map(|k| if model.composed { model.composed_norm(k) } else { 1.0 })
            .collect();
        let s = model.spec.scattering.matrix();
        let p = model.spec.prep.matrix();
        let prep_rows = model
            .spec
            .injection
            .modes()
            .iter()
            .map(|&j| (0..m).map(|i| p[(i, j)]).collect())
            .collect();
        let s_cols = (0..m).map(|i| s.column(i)).collect();
        let patterns = if model.composed {
            None
        } else {
            Some(model.pattern_tensor(&TargetSet::full(&model.space))?)
        };
        Ok(Self {
            model,
            targets: targets.clone(),
            norms,
            prep_rows,
            s_cols,
            patterns,
        })
    }

    pub fn model(&self) -> &PhotonicModel {
        self.model
    }

    pub fn targets(&self) -> &TargetSet {
        &self.targets
    }

    /// Energy scale `M`.
    pub fn scale(&self) -> f64 {
        self.model.modes() as f64
    }

    pub fn state(&self, sigma: &SpinConfiguration) -> Result<LandscapeState> {
        self.model.check_sigma(sigma)?;
        let columns = if self.patterns.is_none() {
            self.model.injection_columns(sigma.as_slice())
        } else {
            Vec::new()
        };
        Ok(LandscapeState {
            spins: sigma.clone(),
            columns,
        })
    }

    /// Writes the state with 0-based spin `i` flipped into `out`.
    pub fn flip_into(&self, state: &LandscapeState, i: usize, out: &mut LandscapeState) {
        out.spins.clone_from(&state.spins);
        out.columns.clone_from(&state.columns);
        let sign = f64::from(state.spins.as_slice()[i]);
        for (col, prep_row) in out.columns.iter_mut().zip(&self.prep_rows) {
            let factor = prep_row[i] * (-2.0 * sign);
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (c, s) in col.iter_mut().zip(&self.s_cols[i]) {
                *c += factor * s;
            }
        }
        out.spins.flip_in_place(i);
    }

    fn amplitude(&self, state: &LandscapeState, k: usize) -> Complex64 {
        match &self.patterns {
            Some(p) => {
                let pattern = &p.patterns[k];
                contract(&self.model.space, pattern, state.spins.as_slice())
            }
            None => composed_amplitude(&state.columns, &self.model.space.configs()[k]) / self.norms[k],
        }
    }

    /// `P_S(sigma, K)` for the cached state.
    pub fn target_probability(&self, state: &LandscapeState) -> f64 {
        self.targets
            .members()
            .iter()
            .map(|&k| self.amplitude(state, k).norm_sqr())
            .sum()
    }

    pub fn energy(&self, state: &LandscapeState) -> f64 {
        -self.scale() * self.target_probability(state)
    }

    /// Full output distribution of the cached state.
    pub fn distribution(&self, state: &LandscapeState) -> Vec<f64> {
        (0..self.model.space.len())
            .map(|k| self.amplitude(state, k).norm_sqr())
            .collect()
    }

    /// Energy estimated from `events` simulated detections.
    pub fn sampled_energy<R: Rng + ?Sized>(
        &self,
        state: &LandscapeState,
        events: u64,
        rng: &mut R,
    ) -> Result<f64> {
        let dist = self.distribution(state);
        let counts = sample_counts(&dist, events, rng)?;
        let hits: u64 = self.targets.members().iter().map(|&k| counts[k]).sum();
        Ok(-self.scale() * hits as f64 / events as f64)
    }
}

/// `1/2 sum_k |P_k - Q_k|`.
pub fn total_variation_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    for (name, d) in [("first", p), ("second", q)] {
        let s: f64 = d.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(invalid(format!("{name} distribution sums to {s}")));
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Multinomial draw of `events` outcomes from `p`, by sequential binomials.
pub fn sample_counts<R: Rng + ?Sized>(p: &[f64], events: u64, rng: &mut R) -> Result<Vec<u64>> {
    if events == 0 {
        return Err(invalid("number of events must be positive"));
    }
    if p.is_empty() {
        return Err(invalid("empty distribution"));
    }
    if p.iter().any(|&v| v.is_nan() || v < -1e-12) {
        return Err(invalid("distribution has negative or NaN entries"));
    }
    let total: f64 = p.iter().map(|v| v.max(0.0)).sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(invalid(format!("distribution sums to {total}")));
    }
    let mut counts = vec![0u64; p.len()];
    let mut remaining = events;
    let mut mass = total;
    let last = p.len() - 1;
    for (i, &v) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == last {
            counts[i] = remaining;
            break;
        }
        let v = v.max(0.0);
        let q = if mass > 0.0 { (v / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(remaining, q)
            .map_err(|e| invalid(format!("binomial parameters: {e}")))?
            .sample(rng);
        counts[i] = c;
        remaining -= c;
        mass -= v;
    }
    Ok(counts)
}

/// [`sample_counts`] with its own seeded generator.
pub fn sample_counts_seeded(p: &[f64], events: u64, seed: u64) -> Result<Vec<u64>> {
    sample_counts(p, events, &mut rng_from_seed(seed))
}

/// Normalizes counts into an empirical distribution.
pub fn empirical_distribution(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{haar_random_unitary, ComplexMatrix};

    fn spec(s: UnitarySpec, prep: UnitarySpec, inj: &[usize]) -> ScatteringSpec {
        let m = s.modes();
        ScatteringSpec::new(s, prep, PhotonConfiguration::new(inj, m).unwrap()).unwrap()
    }

    #[test]
    fn identity_preparation_is_a_point_mass() {
        let space = ConfigurationSpace::enumerate(3, 2).unwrap();
        let id = UnitarySpec::identity(3).unwrap();
        let inj = PhotonConfiguration::new(&[1, 1], 3).unwrap();
        let input = prepare_input(&id, &inj, &space).unwrap();
        assert_eq!(input.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(input.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn hong_ou_mandel_preparation() {
        let space = ConfigurationSpace::enumerate(2, 2).unwrap();
        let inj = PhotonConfiguration::new(&[1, 2], 2).unwrap();
        let input = prepare_input(&dft_matrix(2).unwrap(), &inj, &space).unwrap();
        let a = input.amplitudes();
        assert!(a[1].norm() < 1e-15);
        assert!((a[0].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((a[2].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((a[0] + a[2]).norm() < 1e-12);
    }

    #[test]
    fn dft_six_bunched_injection_is_uniform_per_type() {
        // Frozen from the permanent: |a_x|^2 = 2/36 unbunched, 1/36 bunched.
        let space = ConfigurationSpace::enumerate(6, 2).unwrap();
        for j in 1..=6 {
            let inj = PhotonConfiguration::bunched(j, 2, 6).unwrap();
            let input = prepare_input(&dft_matrix(6).unwrap(), &inj, &space).unwrap();
            for (x, a) in space.configs().iter().zip(input.amplitudes()) {
                let want = if x.is_bunched() { 1.0 / 36.0 } else { 2.0 / 36.0 };
                assert!((a.norm_sqr() - want).abs() < 1e-14, "{x}");
            }
        }
    }

    #[test]
    fn identity_everything_gives_spin_product() {
        let id = UnitarySpec::identity(3).unwrap();
        let model = PhotonicModel::new(spec(id.clone(), id, &[1, 2])).unwrap();
        let k = model.space().index_of(&PhotonConfiguration::new(&[1, 2], 3).unwrap()).unwrap();
        for code in 0..8 {
            let sigma = SpinConfiguration::from_code(code, 3);
            let amp = model.amplitude_sum(&sigma, k).unwrap();
            let s = sigma.as_slice();
            assert!((amp - Complex64::new(f64::from(s[0] * s[1]), 0.0)).norm() < 1e-15);
            assert!((model.amplitude_composed(&sigma, k).unwrap() - amp).norm() < 1e-15);
            let dist = model.output_distribution(&sigma).unwrap();
            assert!((dist[k] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hom_output_distribution() {
        let d = dft_matrix(2).unwrap();
        let model = PhotonicModel::new(spec(UnitarySpec::identity(2).unwrap(), d, &[1, 2])).unwrap();
        let p = model.output_distribution(&SpinConfiguration::all_up(2)).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && p[1].abs() < 1e-12 && (p[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn routes_agree_on_random_instances() {
        for seed in 0..5 {
            let s = haar_random_unitary(4, seed).unwrap();
            let prep = haar_random_unitary(4, seed + 100).unwrap();
            let model = PhotonicModel::new(spec(s, prep, &[1, 3])).unwrap();
            let mut rng = rng_from_seed(seed);
            for _ in 0..8 {
                let sigma = SpinConfiguration::random(4, &mut rng);
                for k in 0..model.space().len() {
                    let a = model.amplitude_sum(&sigma, k).unwrap();
                    let b = model.amplitude_composed(&sigma, k).unwrap();
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn global_flip_leaves_amplitudes_unchanged_for_two_photons() {
        let model = PhotonicModel::new(spec(
            haar_random_unitary(5, 1).unwrap(),
            dft_matrix(5).unwrap(),
            &[2, 2],
        ))
        .unwrap();
        let sigma: SpinConfiguration = "+--+-".parse().unwrap();
        let flipped = sigma.negated();
        let k = TargetSet::from_ordinals(model.space(), &[0, 4, 9]).unwrap();
        assert_eq!(model.energy(&sigma, &k).unwrap(), model.energy(&flipped, &k).unwrap());
    }

    #[test]
    fn target_probability_edge_cases() {
        let model = PhotonicModel::new(spec(
            haar_random_unitary(6, 2).unwrap(),
            dft_matrix(6).unwrap(),
            &[1, 1],
        ))
        .unwrap();
        let sigma: SpinConfiguration = "+-+--+".parse().unwrap();
        let full = TargetSet::full(model.space());
        assert!((model.target_probability(&sigma, &full).unwrap() - 1.0).abs() < 1e-12);
        assert!((model.energy(&sigma, &full).unwrap() + 6.0).abs() < 1e-11);
        let empty = TargetSet::from_ordinals(model.space(), &[]).unwrap();
        assert_eq!(model.target_probability(&sigma, &empty).unwrap(), 0.0);
        let single = TargetSet::from_ordinals(model.space(), &[7]).unwrap();
        let dist = model.output_distribution(&sigma).unwrap();
        assert!((model.target_probability(&sigma, &single).unwrap() - dist[7]).abs() < 1e-15);
    }

    #[test]
    fn identity_scattering_patterns_are_diagonal() {
        let id = UnitarySpec::identity(4).unwrap();
        let model = PhotonicModel::new(spec(id, dft_matrix(4).unwrap(), &[1, 1])).unwrap();
        let x = model.pattern_tensor(&TargetSet::full(model.space())).unwrap();
        for (k, pattern) in x.iter() {
            for (xo, v) in pattern.iter().enumerate() {
                if xo != k {
                    assert!(v.norm() < 1e-15);
                } else {
                    assert!((v - model.input().amplitudes()[k]).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn pattern_completeness_and_synaptic_properties() {
        let model = PhotonicModel::new(spec(
            haar_random_unitary(6, 8).unwrap(),
            dft_matrix(6).unwrap(),
            &[1, 1],
        ))
        .unwrap();
        let full = model.pattern_tensor(&TargetSet::full(model.space())).unwrap();
        let mut rng = rng_from_seed(9);
        for _ in 0..10 {
            let sigma = SpinConfiguration::random(6, &mut rng);
            let total: f64 = full
                .targets()
                .iter()
                .map(|&k| full.contract(model.space(), sigma.as_slice(), k).unwrap().norm_sqr())
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let k = TargetSet::from_ordinals(model.space(), &[2, 5, 11]).unwrap();
        let j = synaptic_tensor(&model.pattern_tensor(&k).unwrap());
        assert!(j.hermiticity_error() < 1e-15);
        for x in 0..j.dim() {
            assert!(j.get(x, x).re >= 0.0 && j.get(x, x).im.abs() < 1e-15);
        }
    }

    #[test]
    fn landscape_tracks_flips_and_matches_model() {
        let model = PhotonicModel::new(spec(
            haar_random_unitary(6, 4).unwrap(),
            dft_matrix(6).unwrap(),
            &[1, 1],
        ))
        .unwrap();
        let k = TargetSet::from_ordinals(model.space(), &[0, 3, 17]).unwrap();
        let land = Landscape::new(&model, &k).unwrap();
        let mut rng = rng_from_seed(4);
        let mut state = land.state(&SpinConfiguration::random(6, &mut rng)).unwrap();
        let mut scratch = state.clone();
        for _ in 0..200 {
            let i = rng.random_range(0..6);
            land.flip_into(&state, i, &mut scratch);
            std::mem::swap(&mut state, &mut scratch);
            let direct = model.energy(state.spins(), &k).unwrap();
            assert!((land.energy(&state) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn explicit_input_uses_tensor_route() {
        let s = haar_random_unitary(3, 5).unwrap();
        let spec = spec(s, dft_matrix(3).unwrap(), &[1, 1]);
        let space = ConfigurationSpace::enumerate(3, 2).unwrap();
        let amps: Vec<Complex64> = (0..space.len())
            .map(|i| Complex64::from_polar(1.0 / (space.len() as f64).sqrt(), i as f64))
            .collect();
        let input = InputState::explicit(&space, amps).unwrap();
        let model = PhotonicModel::with_input(spec, space, input).unwrap();
        assert!(!model.has_composed_route());
        let sigma: SpinConfiguration = "+-+".parse().unwrap();
        let p = model.output_distribution(&sigma).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let k = TargetSet::from_ordinals(model.space(), &[1, 4]).unwrap();
        let land = Landscape::new(&model, &k).unwrap();
        let st = land.state(&sigma).unwrap();
        assert!((land.energy(&st) - model.energy(&sigma, &k).unwrap()).abs() < 1e-12);
        assert!(model.amplitude_composed(&sigma, 0).is_err());
    }

    #[test]
    fn explicit_input_must_be_normalized() {
        let space = ConfigurationSpace::enumerate(2, 2).unwrap();
        assert!(InputState::explicit(&space, vec![Complex64::new(1.0, 0.0); 3]).is_err());
        assert!(InputState::explicit(&space, vec![Complex64::new(1.0, 0.0); 2]).is_err());
    }

    #[test]
    fn tvd_examples() {
        assert_eq!(total_variation_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(total_variation_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(total_variation_distance(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 0.5);
        assert!(total_variation_distance(&[1.0], &[0.5, 0.5]).is_err());
        assert!(total_variation_distance(&[0.4, 0.4], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn sampling_examples() {
        let counts = sample_counts_seeded(&[0.0, 1.0, 0.0], 500, 1).unwrap();
        assert_eq!(counts, vec![0, 500, 0]);
        let p = [0.1, 0.2, 0.3, 0.4];
        let c = sample_counts_seeded(&p, 12345, 2).unwrap();
        assert_eq!(c.iter().sum::<u64>(), 12345);
        assert_eq!(c, sample_counts_seeded(&p, 12345, 2).unwrap());
        assert!(sample_counts_seeded(&p, 0, 2).is_err());
        assert!(sample_counts_seeded(&[0.5, 0.6], 10, 2).is_err());
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let s = haar_random_unitary(4, 0).unwrap();
        let p = dft_matrix(3).unwrap();
        assert!(ScatteringSpec::new(s.clone(), p, PhotonConfiguration::new(&[1, 1], 4).unwrap()).is_err());
        let model = PhotonicModel::new(spec(s, dft_matrix(4).unwrap(), &[1, 1])).unwrap();
        assert!(model.amplitude_sum(&SpinConfiguration::all_up(3), 0).is_err());
        assert!(model.amplitude_sum(&SpinConfiguration::all_up(4), 99).is_err());
        let _ = ComplexMatrix::identity(1);
    }
}
