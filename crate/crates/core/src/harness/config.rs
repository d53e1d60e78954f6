//! Run configuration: a TOML document with nested sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{GridPoint, ThresholdMode};
use crate::dynamics::{EnergyMode, DEFAULT_EVENTS};
use crate::error::{Error, Result};
use crate::fock::{ConfigurationSpace, PhotonConfiguration, SpinConfiguration, TargetSet};
use crate::harness::matrix_io::load_unitary;
use crate::matrix::{dft_matrix, haar_random_unitary, hadamard_row_unitary, UnitarySpec};
use crate::model::PrepKind;
use crate::seed::{derive_rng, derive_seed};

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Energy-mode name used in files and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyModeName {
    #[default]
    Exact,
    Sampled,
}

impl std::str::FromStr for EnergyModeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "sampled" => Ok(Self::Sampled),
            other => Err(cfg_err(format!("unknown energy mode `{other}`"))),
        }
    }
}

/// Where the scattering unitary `S` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScatteringSource {
    /// Haar-random; the seed defaults to one derived from the master seed.
    Haar {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Dft,
    Identity,
    /// Real orthogonal matrix with prescribed leading `+-1` rows.
    Hadamard {
        rows: Vec<Vec<i8>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Text file, see [`crate::harness::matrix_io`].
    Explicit { path: PathBuf },
}

impl Default for ScatteringSource {
    fn default() -> Self {
        Self::Haar { seed: None }
    }
}

/// Where the target set `K` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSource {
    /// Uniform draws without replacement, one set per listed `N_P`.
    Uniform { n_patterns: Vec<usize> },
    /// Listed configurations, 1-based modes.
    Explicit { configs: Vec<Vec<usize>> },
}

impl Default for TargetSource {
    fn default() -> Self {
        Self::Uniform { n_patterns: vec![1, 3, 6] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub temperatures: Vec<f64>,
    pub n_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    pub n_replicas: usize,
    /// Largest lag of the autocorrelation table.
    pub max_lag: usize,
    pub reestimate_incumbent: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            temperatures: vec![0.1, 0.25, 0.35, 0.5],
            n_steps: 1000,
            burn_in: None,
            n_replicas: 1,
            max_lag: 100,
            reestimate_incumbent: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributionConfig {
    /// Spin layers such as `"+-+-+-"`; every layer when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spins: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    /// Explicit grid; when empty the grid is `alphas x temperatures`.
    pub points: Vec<GridPoint>,
    pub alphas: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub n_disorder: usize,
    pub n_replicas: usize,
    pub n_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    pub threshold: ThresholdMode,
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            alphas: vec![0.01, 0.03, 0.1],
            temperatures: vec![0.05, 0.25, 1.0],
            n_disorder: 20,
            n_replicas: 50,
            n_steps: 2000,
            burn_in: None,
            threshold: ThresholdMode::Fixed,
        }
    }
}

impl PhaseDiagramConfig {
    pub fn grid(&self) -> Vec<GridPoint> {
        if !self.points.is_empty() {
            return self.points.clone();
        }
        self.alphas
            .iter()
            .flat_map(|&alpha| self.temperatures.iter().map(move |&temperature| GridPoint { alpha, temperature }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopfieldConfig {
    /// Prescribed `+-1` rows of `S`; defaults to the all-ones row and a
    /// half-and-half row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<i8>>>,
    /// Stored patterns `(a, a)` for `a = 1..=n_patterns`.
    pub n_patterns: usize,
    pub temperature: f64,
    /// Optional high-temperature control run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_temperature: Option<f64>,
    pub n_replicas: usize,
    pub n_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
}

impl Default for HopfieldConfig {
    fn default() -> Self {
        Self {
            rows: None,
            n_patterns: 2,
            temperature: 0.05,
            control_temperature: None,
            n_replicas: 50,
            n_steps: 1000,
            burn_in: None,
        }
    }
}

/// Complete description of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub modes: usize,
    pub photons: usize,
    pub prep: PrepKind,
    /// Injected modes, 1-based; all photons in mode 1 when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injection: Option<Vec<usize>>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub energy_mode: EnergyModeName,
    /// Detection events per energy estimate in sampled mode.
    pub events: u64,
    pub scattering: ScatteringSource,
    pub targets: TargetSource,
    pub dynamics: DynamicsConfig,
    pub distribution: DistributionConfig,
    pub phase_diagram: PhaseDiagramConfig,
    pub hopfield: HopfieldConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            modes: 6,
            photons: 2,
            prep: PrepKind::Dft,
            injection: None,
            seed: 42,
            output_dir: PathBuf::from("runs"),
            energy_mode: EnergyModeName::Exact,
            events: DEFAULT_EVENTS,
            scattering: ScatteringSource::default(),
            targets: TargetSource::default(),
            dynamics: DynamicsConfig::default(),
            distribution: DistributionConfig::default(),
            phase_diagram: PhaseDiagramConfig::default(),
            hopfield: HopfieldConfig::default(),
        }
    }
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub energy_mode: Option<EnergyModeName>,
    pub events: Option<u64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a file; relative matrix paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let ScatteringSource::Explicit { path: p } = &mut cfg.scattering {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(m) = o.energy_mode {
            self.energy_mode = m;
        }
        if let Some(e) = o.events {
            self.events = e;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 || self.photons == 0 {
            return Err(cfg_err("modes and photons must be positive"));
        }
        if self.modes > 64 {
            return Err(cfg_err("at most 64 modes are supported"));
        }
        self.injection()?;
        if self.events == 0 {
            return Err(cfg_err("events must be positive"));
        }
        let temps = self
            .dynamics
            .temperatures
            .iter()
            .chain(&self.phase_diagram.temperatures)
            .chain(self.phase_diagram.points.iter().map(|p| &p.temperature))
            .chain(std::iter::once(&self.hopfield.temperature))
            .chain(self.hopfield.control_temperature.iter());
        for &t in temps {
            if !t.is_finite() || t < 0.0 {
                return Err(cfg_err(format!("temperature {t} must be finite and >= 0")));
            }
        }
        for &a in self
            .phase_diagram
            .alphas
            .iter()
            .chain(self.phase_diagram.points.iter().map(|p| &p.alpha))
        {
            if !a.is_finite() || a <= 0.0 {
                return Err(cfg_err(format!("alpha {a} must be positive")));
            }
        }
        for (name, n) in [
            ("dynamics.n_steps", self.dynamics.n_steps),
            ("dynamics.n_replicas", self.dynamics.n_replicas),
            ("phase_diagram.n_steps", self.phase_diagram.n_steps),
            ("phase_diagram.n_replicas", self.phase_diagram.n_replicas),
            ("phase_diagram.n_disorder", self.phase_diagram.n_disorder),
            ("hopfield.n_steps", self.hopfield.n_steps),
            ("hopfield.n_replicas", self.hopfield.n_replicas),
            ("hopfield.n_patterns", self.hopfield.n_patterns),
        ] {
            if n == 0 {
                return Err(cfg_err(format!("{name} must be positive")));
            }
        }
        for (name, burn, steps) in [
            ("dynamics", self.dynamics.burn_in, self.dynamics.n_steps),
            ("phase_diagram", self.phase_diagram.burn_in, self.phase_diagram.n_steps),
            ("hopfield", self.hopfield.burn_in, self.hopfield.n_steps),
        ] {
            if burn.is_some_and(|b| b >= steps) {
                return Err(cfg_err(format!("{name}.burn_in must be smaller than n_steps")));
            }
        }
        match &self.targets {
            TargetSource::Uniform { n_patterns } => {
                if n_patterns.is_empty() || n_patterns.contains(&0) {
                    return Err(cfg_err("targets.n_patterns must be a non-empty list of positive counts"));
                }
            }
            TargetSource::Explicit { configs } => {
                for c in configs {
                    let pc = PhotonConfiguration::new(c, self.modes)?;
                    if pc.n_photons() != self.photons {
                        return Err(cfg_err(format!("target {pc} does not have {} photons", self.photons)));
                    }
                }
            }
        }
        if let Some(spins) = &self.distribution.spins {
            for s in spins {
                let sigma: SpinConfiguration = s.parse()?;
                if sigma.len() != self.modes {
                    return Err(cfg_err(format!("spin layer `{s}` does not have {} spins", self.modes)));
                }
            }
        }
        Ok(())
    }

    pub fn injection(&self) -> Result<PhotonConfiguration> {
        match &self.injection {
            None => PhotonConfiguration::bunched(1, self.photons, self.modes),
            Some(modes) => {
                if modes.len() != self.photons {
                    return Err(cfg_err(format!(
                        "injection lists {} modes for {} photons",
                        modes.len(),
                        self.photons
                    )));
                }
                PhotonConfiguration::new(modes, self.modes)
            }
        }
    }

    pub fn energy_mode(&self) -> EnergyMode {
        match self.energy_mode {
            EnergyModeName::Exact => EnergyMode::Exact,
            EnergyModeName::Sampled => EnergyMode::Sampled { events: self.events },
        }
    }

    pub fn prep(&self) -> Result<UnitarySpec> {
        self.prep.build(self.modes)
    }

    /// Builds `S`; generated unitaries use seeds derived from the master seed
    /// unless one is given.
    pub fn scattering(&self) -> Result<UnitarySpec> {
        let m = self.modes;
        let s = match &self.scattering {
            ScatteringSource::Haar { seed } => {
                haar_random_unitary(m, seed.unwrap_or_else(|| derive_seed(self.seed, "scattering", &[])))?
            }
            ScatteringSource::Dft => dft_matrix(m)?,
            ScatteringSource::Identity => UnitarySpec::identity(m)?,
            ScatteringSource::Hadamard { rows, seed } => {
                hadamard_row_unitary(m, rows, seed.unwrap_or_else(|| derive_seed(self.seed, "hadamard", &[])))?
            }
            ScatteringSource::Explicit { path } => load_unitary(path)?,
        };
        if s.modes() != m {
            return Err(cfg_err(format!("scattering matrix is {0}x{0}, expected {m}x{m}", s.modes())));
        }
        Ok(s)
    }

    /// Target sets to run: one per listed `N_P`, or the explicit set.
    pub fn target_sets(&self, space: &ConfigurationSpace) -> Result<Vec<TargetSet>> {
        match &self.targets {
            TargetSource::Uniform { n_patterns } => n_patterns
                .iter()
                .map(|&n_p| {
                    let mut rng = derive_rng(self.seed, "targets", &[0, n_p as u64]);
                    TargetSet::uniform_random(space, n_p, &mut rng)
                })
                .collect(),
            TargetSource::Explicit { configs } => {
                let pcs = configs
                    .iter()
                    .map(|c| PhotonConfiguration::new(c, self.modes))
                    .collect::<Result<Vec<_>>>()?;
                Ok(vec![TargetSet::from_configs(space, &pcs)?])
            }
        }
    }

    /// Hadamard rows for the retrieval experiment.
    pub fn hopfield_rows(&self) -> Result<Vec<Vec<i8>>> {
        if let Some(rows) = &self.hopfield.rows {
            return Ok(rows.clone());
        }
        let m = self.modes;
        if !m.is_multiple_of(2) {
            return Err(cfg_err("default Hadamard rows need an even number of modes; list hopfield.rows"));
        }
        let ones = vec![1i8; m];
        let split: Vec<i8> = (0..m).map(|i| if i < m / 2 { 1 } else { -1 }).collect();
        Ok(vec![ones, split])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn full_document_round_trips() {
        let text = r#"
modes = 10
photons = 2
seed = 7
injection = [1, 1]
energy_mode = "sampled"
events = 5000

[scattering]
kind = "hadamard"
rows = [[1, 1, 1, 1, 1, 1, 1, 1, 1, 1], [1, 1, 1, 1, 1, -1, -1, -1, -1, -1]]

[targets]
kind = "explicit"
configs = [[1, 1], [2, 2]]

[phase_diagram]
points = [{ alpha = 0.01, temperature = 0.05 }, { alpha = 0.1, temperature = 1.0 }]
threshold = "quantile"
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.energy_mode(), EnergyMode::Sampled { events: 5000 });
        assert_eq!(cfg.phase_diagram.grid().len(), 2);
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(cfg.scattering().unwrap().modes(), 10);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("modes = 0").is_err());
        assert!(RunConfig::from_toml("unknown = 1").is_err());
        assert!(RunConfig::from_toml("injection = [1, 9]").is_err());
        assert!(RunConfig::from_toml("injection = [1]").is_err());
        assert!(RunConfig::from_toml("[dynamics]\ntemperatures = [-1.0]").is_err());
        assert!(RunConfig::from_toml("[dynamics]\nn_steps = 10\nburn_in = 10").is_err());
        assert!(RunConfig::from_toml("[targets]\nkind = \"uniform\"\nn_patterns = [0]").is_err());
        assert!(RunConfig::from_toml("[distribution]\nspins = [\"++\"]").is_err());
        assert!(RunConfig::from_toml("events = 0").is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            seed: Some(5),
            output_dir: Some("elsewhere".into()),
            energy_mode: Some(EnergyModeName::Sampled),
            events: Some(123),
        });
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.energy_mode(), EnergyMode::Sampled { events: 123 });
    }

    #[test]
    fn target_sets_are_seeded() {
        let cfg = RunConfig::default();
        let space = ConfigurationSpace::enumerate(6, 2).unwrap();
        let a = cfg.target_sets(&space).unwrap();
        assert_eq!(a, cfg.target_sets(&space).unwrap());
        assert_eq!(a.iter().map(|k| k.len()).collect::<Vec<_>>(), vec![1, 3, 6]);
    }
}
