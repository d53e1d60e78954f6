//! Metropolis dynamics on the photonic energy landscape.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::SpinConfiguration;
use crate::model::{Landscape, LandscapeState};
use crate::seed::{derive_rng, SimRng};

/// Default number of simulated detection events in sampled mode.
pub const DEFAULT_EVENTS: u64 = 10_000;

/// How the chain evaluates energies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EnergyMode {
    #[default]
    Exact,
    /// Energy estimated from `events` multinomial detections.
    Sampled { events: u64 },
}

/// Parameters of one Metropolis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCParams {
    pub temperature: f64,
    pub n_steps: usize,
    pub burn_in: usize,
    pub energy_mode: EnergyMode,
    pub seed: u64,
    /// In sampled mode, re-measure the incumbent at every proposal instead
    /// of reusing its last estimate.
    pub reestimate_incumbent: bool,
}

impl MCParams {
    /// Exact energies, burn-in of half the trajectory.
    pub fn new(temperature: f64, n_steps: usize, seed: u64) -> Self {
        Self {
            temperature,
            n_steps,
            burn_in: n_steps / 2,
            energy_mode: EnergyMode::Exact,
            seed,
            reestimate_incumbent: true,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_energy_mode(mut self, mode: EnergyMode) -> Self {
        self.energy_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(invalid(format!("temperature {} must be finite and >= 0", self.temperature)));
        }
        if self.n_steps == 0 {
            return Err(invalid("n_steps must be at least 1"));
        }
        if self.burn_in >= self.n_steps {
            return Err(invalid(format!(
                "burn_in {} must be smaller than n_steps {}",
                self.burn_in, self.n_steps
            )));
        }
        if let EnergyMode::Sampled { events: 0 } = self.energy_mode {
            return Err(invalid("sampled energy mode needs at least one event"));
        }
        Ok(())
    }
}

/// Metropolis rule with `u` uniform in `[0, 1)`.
pub fn metropolis_accept(delta_e: f64, temperature: f64, u: f64) -> bool {
    if delta_e <= 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    u < (-delta_e / temperature).exp()
}

/// A single Markov chain with its cached energy.
pub struct Chain<'l, 'm> {
    landscape: &'l Landscape<'m>,
    state: LandscapeState,
    scratch: LandscapeState,
    energy: f64,
    estimate: f64,
    params: MCParams,
    rng: SimRng,
    accepted: u64,
    proposals: u64,
}

impl<'l, 'm> Chain<'l, 'm> {
    pub fn new(
        landscape: &'l Landscape<'m>,
        initial: &SpinConfiguration,
        params: MCParams,
        mut rng: SimRng,
    ) -> Result<Self> {
        params.validate()?;
        let state = landscape.state(initial)?;
        let energy = landscape.energy(&state);
        let estimate = match params.energy_mode {
            EnergyMode::Exact => energy,
            EnergyMode::Sampled { events } => landscape.sampled_energy(&state, events, &mut rng)?,
        };
        Ok(Self {
            landscape,
            scratch: state.clone(),
            state,
            energy,
            estimate,
            params,
            rng,
            accepted: 0,
            proposals: 0,
        })
    }

    pub fn spins(&self) -> &SpinConfiguration {
        self.state.spins()
    }

    /// Exact energy of the current state.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn proposals(&self) -> u64 {
        self.proposals
    }

    /// One proposal: flip a uniformly chosen spin, accept by Metropolis.
    pub fn metropolis_update(&mut self) -> Result<bool> {
        let m = self.state.spins().len();
        let i = self.rng.random_range(0..m);
        self.landscape.flip_into(&self.state, i, &mut self.scratch);
        let proposed_exact = self.landscape.energy(&self.scratch);
        let (current, proposed) = match self.params.energy_mode {
            EnergyMode::Exact => (self.energy, proposed_exact),
            EnergyMode::Sampled { events } => {
                let current = if self.params.reestimate_incumbent {
                    self.landscape.sampled_energy(&self.state, events, &mut self.rng)?
                } else {
                    self.estimate
                };
                let proposed = self.landscape.sampled_energy(&self.scratch, events, &mut self.rng)?;
                (current, proposed)
            }
        };
        let delta = proposed - current;
        // draw u only when it can matter, so exact-mode streams stay short
        let accept = delta <= 0.0
            || (self.params.temperature > 0.0
                && metropolis_accept(delta, self.params.temperature, self.rng.random::<f64>()));
        self.proposals += 1;
        if accept {
            std::mem::swap(&mut self.state, &mut self.scratch);
            self.energy = proposed_exact;
            self.estimate = proposed;
            self.accepted += 1;
        } else {
            self.estimate = current;
        }
        Ok(accept)
    }

    /// One Monte Carlo step: `M` proposals.
    pub fn run_mcs(&mut self) -> Result<()> {
        for _ in 0..self.state.spins().len() {
            self.metropolis_update()?;
        }
        Ok(())
    }
}

/// Spin configurations and exact energies recorded once per MCS, for
/// `t = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    modes: usize,
    spins: Vec<i8>,
    energies: Vec<f64>,
    acceptance_count: u64,
    proposals: u64,
    burn_in: usize,
}

impl Trajectory {
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of recorded configurations (`n_steps + 1`).
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn spins_at(&self, t: usize) -> &[i8] {
        &self.spins[t * self.modes..(t + 1) * self.modes]
    }

    pub fn final_spins(&self) -> SpinConfiguration {
        SpinConfiguration::new(self.spins_at(self.len() - 1).to_vec()).expect("recorded spins are +-1")
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn acceptance_count(&self) -> u64 {
        self.acceptance_count
    }

    pub fn proposals(&self) -> u64 {
        self.proposals
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }
}

/// Runs one chain for `params.n_steps` MCS.
pub fn run_chain(
    landscape: &Landscape<'_>,
    initial: &SpinConfiguration,
    params: &MCParams,
    rng: SimRng,
) -> Result<Trajectory> {
    let mut chain = Chain::new(landscape, initial, params.clone(), rng)?;
    let m = initial.len();
    let mut spins = Vec::with_capacity((params.n_steps + 1) * m);
    let mut energies = Vec::with_capacity(params.n_steps + 1);
    spins.extend_from_slice(chain.spins().as_slice());
    energies.push(chain.energy());
    for _ in 0..params.n_steps {
        chain.run_mcs()?;
        spins.extend_from_slice(chain.spins().as_slice());
        energies.push(chain.energy());
    }
    Ok(Trajectory {
        modes: m,
        spins,
        energies,
        acceptance_count: chain.accepted(),
        proposals: chain.proposals(),
        burn_in: params.burn_in,
    })
}

/// `F_self(tau) = (1/M) mean_t sigma(t) . sigma(t + tau)` over
/// `t in [burn_in, len - 1 - tau]`.
pub fn autocorrelation(traj: &Trajectory, tau: usize) -> Result<f64> {
    let start = traj.burn_in;
    if traj.is_empty() || start + tau >= traj.len() {
        return Err(Error::InsufficientSamples(format!(
            "lag {tau} with burn-in {start} exceeds a trajectory of {} records",
            traj.len()
        )));
    }
    let last = traj.len() - 1 - tau;
    let mut total = 0i64;
    for t in start..=last {
        let a = traj.spins_at(t);
        let b = traj.spins_at(t + tau);
        total += a.iter().zip(b).map(|(&x, &y)| i64::from(x * y)).sum::<i64>();
    }
    let count = (last - start + 1) as f64;
    Ok(total as f64 / (count * traj.modes as f64))
}

/// `F_self(tau)` for `tau = 0..=max_tau`.
pub fn autocorrelation_curve(traj: &Trajectory, max_tau: usize) -> Result<Vec<f64>> {
    (0..=max_tau).map(|tau| autocorrelation(traj, tau)).collect()
}

/// First lag at which the curve drops below `level`.
pub fn first_crossing_below(curve: &[f64], level: f64) -> Option<usize> {
    curve.iter().position(|&f| f < level)
}

/// Independent chains sharing one landscape.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaEnsemble {
    trajectories: Vec<Trajectory>,
}

impl ReplicaEnsemble {
    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn final_states(&self) -> Vec<SpinConfiguration> {
        self.trajectories.iter().map(Trajectory::final_spins).collect()
    }
}

/// `n_rep` chains from uniform random initial spins. Replica `i` draws from
/// the stream `derive(params.seed, "replica", [i])`, so the ensemble does not
/// depend on scheduling.
pub fn run_replicas(landscape: &Landscape<'_>, params: &MCParams, n_rep: usize) -> Result<ReplicaEnsemble> {
    params.validate()?;
    if n_rep == 0 {
        return Err(invalid("at least one replica is required"));
    }
    let m = landscape.model().modes();
    let trajectories = (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_rng(params.seed, "replica", &[i as u64]);
            let initial = SpinConfiguration::random(m, &mut rng);
            run_chain(landscape, &initial, params, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicaEnsemble { trajectories })
}

/// Sequential variant of [`run_replicas`] with identical output, for callers
/// that already parallelize at a coarser level.
pub fn run_replicas_sequential(
    landscape: &Landscape<'_>,
    params: &MCParams,
    n_rep: usize,
) -> Result<ReplicaEnsemble> {
    params.validate()?;
    if n_rep == 0 {
        return Err(invalid("at least one replica is required"));
    }
    let m = landscape.model().modes();
    let trajectories = (0..n_rep)
        .map(|i| {
            let mut rng = derive_rng(params.seed, "replica", &[i as u64]);
            let initial = SpinConfiguration::random(m, &mut rng);
            run_chain(landscape, &initial, params, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicaEnsemble { trajectories })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{PhotonConfiguration, TargetSet};
    use crate::matrix::{dft_matrix, haar_random_unitary};
    use crate::model::{PhotonicModel, ScatteringSpec};
    use crate::seed::rng_from_seed;

    fn model(m: usize, seed: u64) -> PhotonicModel {
        let spec = ScatteringSpec::new(
            haar_random_unitary(m, seed).unwrap(),
            dft_matrix(m).unwrap(),
            PhotonConfiguration::bunched(1, 2, m).unwrap(),
        )
        .unwrap();
        PhotonicModel::new(spec).unwrap()
    }

    #[test]
    fn acceptance_rule() {
        assert!(metropolis_accept(-1.0, 0.0, 0.99));
        assert!(metropolis_accept(0.0, 0.0, 0.99));
        assert!(!metropolis_accept(1e-12, 0.0, 0.0));
        assert!(metropolis_accept(-0.3, 0.5, 0.999_999));
    }

    #[test]
    fn acceptance_calibration() {
        let mut rng = rng_from_seed(77);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| metropolis_accept(0.1, 0.1, rng.random::<f64>()))
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate - (-1.0f64).exp()).abs() < 0.01, "{rate}");
    }

    #[test]
    fn params_validation() {
        assert!(MCParams::new(0.1, 10, 0).validate().is_ok());
        assert!(MCParams::new(-0.1, 10, 0).validate().is_err());
        assert!(MCParams::new(0.1, 0, 0).validate().is_err());
        assert!(MCParams::new(0.1, 10, 0).with_burn_in(10).validate().is_err());
        let p = MCParams::new(0.1, 10, 0).with_energy_mode(EnergyMode::Sampled { events: 0 });
        assert!(p.validate().is_err());
    }

    #[test]
    fn one_mcs_is_m_proposals() {
        let m = model(6, 1);
        let k = TargetSet::from_ordinals(m.space(), &[0, 5, 9]).unwrap();
        let land = Landscape::new(&m, &k).unwrap();
        let params = MCParams::new(0.3, 7, 2);
        let traj = run_chain(&land, &SpinConfiguration::all_up(6), &params, rng_from_seed(2)).unwrap();
        assert_eq!(traj.proposals(), 42);
        assert_eq!(traj.len(), 8);
    }

    #[test]
    fn zero_temperature_energy_never_increases() {
        let m = model(6, 3);
        let k = TargetSet::from_ordinals(m.space(), &[1, 4, 12]).unwrap();
        let land = Landscape::new(&m, &k).unwrap();
        for seed in 0..5 {
            let params = MCParams::new(0.0, 100, seed);
            let mut rng = rng_from_seed(seed);
            let init = SpinConfiguration::random(6, &mut rng);
            let traj = run_chain(&land, &init, &params, rng).unwrap();
            for w in traj.energies().windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
            assert!(traj.energies().iter().all(|&e| (-6.0..=0.0).contains(&e)));
        }
    }

    #[test]
    fn recorded_energies_match_model() {
        let m = model(5, 4);
        let k = TargetSet::from_ordinals(m.space(), &[2, 3]).unwrap();
        let land = Landscape::new(&m, &k).unwrap();
        let params = MCParams::new(0.4, 30, 1);
        let traj = run_chain(&land, &SpinConfiguration::all_up(5), &params, rng_from_seed(1)).unwrap();
        for t in 0..traj.len() {
            let s = SpinConfiguration::new(traj.spins_at(t).to_vec()).unwrap();
            assert!((m.energy(&s, &k).unwrap() - traj.energies()[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn autocorrelation_basics() {
        let m = model(6, 5);
        let k = TargetSet::from_ordinals(m.space(), &[0]).unwrap();
        let land = Landscape::new(&m, &k).unwrap();
        let traj = run_chain(&land, &SpinConfiguration::all_up(6), &MCParams::new(0.5, 50, 3), rng_from_seed(3))
            .unwrap();
        assert_eq!(autocorrelation(&traj, 0).unwrap(), 1.0);
        let f = autocorrelation(&traj, 5).unwrap();
        assert!((-1.0..=1.0).contains(&f));
        assert!(autocorrelation(&traj, 26).is_err());
    }

    #[test]
    fn frozen_chain_has_unit_autocorrelation() {
        let m = model(4, 6);
        let k = TargetSet::from_ordinals(m.space(), &[3]).unwrap();
        let land = Landscape::new(&m, &k).unwrap();
        let mut best = SpinConfiguration::all_up(4);
        let mut best_e = 0.0;
        for code in 0..16 {
            let s = SpinConfiguration::from_code(code, 4);
            let e = m.energy(&s, &k).unwrap();
            if e < best_e {
                best_e = e;
                best = s;
            }
        }
        let traj = run_chain(&land, &best, &MCParams::new(0.0, 40, 1), rng_from_seed(8)).unwrap();
        let ties = (0..4)
            .filter(|&i| m.energy(&best.flipped(i + 1).unwrap(), &k).unwrap() <= best_e)
            .count();
        assert_eq!(ties, 0);
        for tau in 0..10 {
            assert_eq!(autocorrelation(&traj, tau).unwrap(), 1.0);
        }
    }

    #[test]
    fn replicas_are_reproducible_and_schedule_free() {
        let m = model(6, 7);
        let k = TargetSet::from_ordinals(m.space(), &[2, 8, 15]).unwrap();
        let land = Landscape::new(&m, &k).unwrap();
        let params = MCParams::new(0.2, 20, 99);
        let a = run_replicas(&land, &params, 6).unwrap();
        let b = run_replicas_sequential(&land, &params, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.trajectories()[0], a.trajectories()[1]);
    }

    #[test]
    fn sampled_mode_runs() {
        let m = model(6, 8);
        let k = TargetSet::from_ordinals(m.space(), &[2, 8, 15]).unwrap();
        let land = Landscape::new(&m, &k).unwrap();
        for reestimate in [true, false] {
            let mut params = MCParams::new(0.2, 10, 1).with_energy_mode(EnergyMode::Sampled { events: 1000 });
            params.reestimate_incumbent = reestimate;
            let traj = run_chain(&land, &SpinConfiguration::all_up(6), &params, rng_from_seed(1)).unwrap();
            assert_eq!(traj.len(), 11);
        }
    }

    #[test]
    fn first_crossing() {
        assert_eq!(first_crossing_below(&[1.0, 0.5, 0.1, 0.3], 0.2), Some(2));
        assert_eq!(first_crossing_below(&[1.0, 0.5], 0.2), None);
    }
}
