//! Cross-checks of the production evaluators against the reference
//! implementations in [`crate::oracle`].

use std::path::PathBuf;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::dynamics::{run_chain, MCParams};
use crate::error::Result;
use crate::fock::{ConfigurationSpace, MultiplicityConvention, PhotonConfiguration, SpinConfiguration, TargetSet};
use crate::harness::config::RunConfig;
use crate::harness::output::{num, RunOutput};
use crate::matrix::{dft_matrix, haar_random_unitary, permanent, ComplexMatrix, UnitarySpec};
use crate::model::{input_amplitudes_unchecked, total_variation_distance, Landscape, PhotonicModel, ScatteringSpec};
use crate::oracle;
use crate::seed::{derive_rng, derive_seed};

pub const PERMANENT_TOLERANCE: f64 = 1e-10;
pub const ROUTE_TOLERANCE: f64 = 1e-10;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;
pub const DETAILED_BALANCE_TVD: f64 = 0.02;

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub convention: MultiplicityConvention,
    pub seed: u64,
    /// Sweeps of the detailed-balance chain.
    pub balance_mcs: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            convention: MultiplicityConvention::Factorial,
            seed: 42,
            balance_mcs: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl OracleCheck {
    fn new(name: &str, max_error: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            max_error,
            tolerance,
            passed: max_error.is_finite() && max_error < tolerance,
            detail,
        }
    }

    fn failed(name: &str, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            max_error: f64::INFINITY,
            tolerance,
            passed: false,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub convention: MultiplicityConvention,
    pub checks: Vec<OracleCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&OracleCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn random_matrix(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn check_permanent(seed: u64) -> Result<OracleCheck> {
    let mut worst = 0.0f64;
    for n in 1..=8 {
        let mut rng = derive_rng(seed, "validate-permanent", &[n as u64]);
        for _ in 0..5 {
            let a = random_matrix(n, &mut rng);
            let exact = oracle::leibniz_permanent(&a)?;
            let err = (permanent(&a)? - exact).norm() / exact.norm().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(OracleCheck::new(
        "permanent",
        worst,
        PERMANENT_TOLERANCE,
        "Ryser vs Leibniz, n = 1..8, 5 complex matrices each".into(),
    ))
}

struct Instance {
    s: UnitarySpec,
    prep: UnitarySpec,
    injection: PhotonConfiguration,
}

fn instances(seed: u64) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (i, (m, inj)) in [(6, vec![1, 1]), (5, vec![1, 1, 2]), (4, vec![1, 2, 3])]
        .into_iter()
        .enumerate()
    {
        out.push(Instance {
            s: haar_random_unitary(m, derive_seed(seed, "validate-s", &[i as u64]))?,
            prep: dft_matrix(m)?,
            injection: PhotonConfiguration::new(&inj, m)?,
        });
    }
    Ok(out)
}

fn build(inst: &Instance, convention: MultiplicityConvention) -> Result<PhotonicModel> {
    let space = ConfigurationSpace::with_convention(inst.s.modes(), inst.injection.n_photons(), convention)?;
    let spec = ScatteringSpec::new(inst.s.clone(), inst.prep.clone(), inst.injection.clone())?;
    PhotonicModel::with_space(spec, space)
}

fn check_routes(opts: &ValidateOptions) -> Result<OracleCheck> {
    let mut worst = 0.0f64;
    for (i, inst) in instances(opts.seed)?.iter().enumerate() {
        let model = match build(inst, opts.convention) {
            Ok(m) => m,
            Err(e) => return Ok(OracleCheck::failed("amplitude_routes", ROUTE_TOLERANCE, e.to_string())),
        };
        let space = model.space();
        let inj = space.require(&inst.injection)?;
        let mut rng = derive_rng(opts.seed, "validate-routes", &[i as u64]);
        for _ in 0..4 {
            let sigma = SpinConfiguration::random(space.modes(), &mut rng);
            let reference =
                oracle::state_vector_amplitudes(inst.s.matrix(), inst.prep.matrix(), inj, &sigma, space)?;
            for (k, r) in reference.iter().enumerate() {
                worst = worst.max((model.amplitude_sum(&sigma, k)? - r).norm());
                worst = worst.max((model.amplitude_composed(&sigma, k)? - r).norm());
            }
        }
    }
    Ok(OracleCheck::new(
        "amplitude_routes",
        worst,
        ROUTE_TOLERANCE,
        "permanent sum and composed permanent vs dense state vector".into(),
    ))
}

fn check_tensor(opts: &ValidateOptions) -> Result<OracleCheck> {
    let mut worst = 0.0f64;
    for (i, inst) in instances(opts.seed)?.iter().enumerate() {
        let model = match build(inst, opts.convention) {
            Ok(m) => m,
            Err(e) => return Ok(OracleCheck::failed("tensor_form", ROUTE_TOLERANCE, e.to_string())),
        };
        let space = model.space();
        let inj = space.require(&inst.injection)?;
        let full = TargetSet::full(space);
        let tensor = model.pattern_tensor(&full)?;
        let synaptic = crate::model::synaptic_tensor(&tensor);
        let mut rng = derive_rng(opts.seed, "validate-tensor", &[i as u64]);
        for _ in 0..3 {
            let sigma = SpinConfiguration::random(space.modes(), &mut rng);
            for k in 0..space.len() {
                let naive =
                    oracle::naive_magnetization(inst.s.matrix(), inst.prep.matrix(), inj, &sigma, space, k)?;
                let m = crate::analysis::magnetization(&sigma, &tensor, space, k)?;
                worst = worst.max((m - naive).norm());
            }
            let p = model.target_probability(&sigma, &full)?;
            worst = worst.max((synaptic.quadratic_form(space, &sigma) - Complex64::new(p, 0.0)).norm());
        }
    }
    Ok(OracleCheck::new(
        "tensor_form",
        worst,
        ROUTE_TOLERANCE,
        "pattern contraction vs explicit loops; synaptic quadratic form vs P(C)".into(),
    ))
}

fn check_normalization(opts: &ValidateOptions) -> Result<OracleCheck> {
    let mut worst = 0.0f64;
    let mut rng = derive_rng(opts.seed, "validate-norm", &[]);
    for (m, n) in [(4, 2), (4, 3), (5, 3), (3, 4)] {
        let space = ConfigurationSpace::with_convention(m, n, opts.convention)?;
        let preps = [dft_matrix(m)?, haar_random_unitary(m, derive_seed(opts.seed, "validate-norm-prep", &[m as u64, n as u64]))?];
        for inj in [PhotonConfiguration::bunched(1, n, m)?, space.configs()[space.len() / 2].clone()] {
            for prep in &preps {
                let a = input_amplitudes_unchecked(prep, &inj, &space)?;
                worst = worst.max((a.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs());
                let spec = ScatteringSpec::new(
                    haar_random_unitary(m, derive_seed(opts.seed, "validate-norm-s", &[m as u64, n as u64]))?,
                    prep.clone(),
                    inj.clone(),
                )?;
                if let Ok(model) = PhotonicModel::with_space(spec, space.clone()) {
                    let sigma = SpinConfiguration::random(m, &mut rng);
                    let total: f64 = model.output_distribution(&sigma)?.iter().sum();
                    worst = worst.max((total - 1.0).abs());
                }
            }
        }
    }
    Ok(OracleCheck::new(
        "normalization",
        worst,
        NORMALIZATION_TOLERANCE,
        format!("input and output norms, {:?} multiplicity", opts.convention),
    ))
}

fn check_detailed_balance(opts: &ValidateOptions) -> Result<OracleCheck> {
    let m = 4;
    let inst = Instance {
        s: haar_random_unitary(m, derive_seed(opts.seed, "validate-balance", &[]))?,
        prep: dft_matrix(m)?,
        injection: PhotonConfiguration::bunched(1, 2, m)?,
    };
    let model = match build(&inst, opts.convention) {
        Ok(model) => model,
        Err(e) => return Ok(OracleCheck::failed("detailed_balance", DETAILED_BALANCE_TVD, e.to_string())),
    };
    let space = model.space();
    let mut rng = derive_rng(opts.seed, "validate-balance-targets", &[]);
    let targets = TargetSet::uniform_random(space, 2, &mut rng)?;
    let temperature = 0.5;
    let exact = oracle::boltzmann_distribution(
        inst.s.matrix(),
        inst.prep.matrix(),
        space.require(&inst.injection)?,
        space,
        targets.members(),
        temperature,
    )?;
    let landscape = Landscape::new(&model, &targets)?;
    let burn_in = 1000.min(opts.balance_mcs / 10);
    let params = MCParams::new(temperature, opts.balance_mcs, derive_seed(opts.seed, "validate-chain", &[]))
        .with_burn_in(burn_in);
    let sigma0 = SpinConfiguration::random(m, &mut rng);
    let traj = run_chain(&landscape, &sigma0, &params, derive_rng(params.seed, "chain", &[]))?;
    let mut visits = vec![0u64; 1 << m];
    for t in traj.burn_in()..traj.len() {
        let code = SpinConfiguration::new(traj.spins_at(t).to_vec())?.code();
        visits[code as usize] += 1;
    }
    let total: u64 = visits.iter().sum();
    let empirical: Vec<f64> = visits.iter().map(|&v| v as f64 / total as f64).collect();
    let tvd = total_variation_distance(&empirical, &exact)?;
    Ok(OracleCheck::new(
        "detailed_balance",
        tvd,
        DETAILED_BALANCE_TVD,
        format!("M = 4, T = 0.5, N_P = 2, {} MCS; TVD of visit frequencies vs Boltzmann", opts.balance_mcs),
    ))
}

/// Runs every oracle comparison.
pub fn run_validation(opts: &ValidateOptions) -> Result<ValidationReport> {
    let checks = vec![
        check_permanent(opts.seed)?,
        check_routes(opts)?,
        check_tensor(opts)?,
        check_normalization(opts)?,
        check_detailed_balance(opts)?,
    ];
    for c in &checks {
        if c.passed {
            log::info!("{}: max error {:.3e} (tolerance {:.1e})", c.name, c.max_error, c.tolerance);
        } else {
            log::warn!("{} failed: max error {:.3e} (tolerance {:.1e}) {}", c.name, c.max_error, c.tolerance, c.detail);
        }
    }
    Ok(ValidationReport {
        convention: opts.convention,
        checks,
    })
}

/// Runs the validation suite and writes `validate.csv`.
pub fn cmd_validate(cfg: &RunConfig, convention: MultiplicityConvention) -> Result<(ValidationReport, PathBuf)> {
    let opts = ValidateOptions {
        convention,
        seed: cfg.seed,
        ..ValidateOptions::default()
    };
    let report = run_validation(&opts)?;
    let out = RunOutput::create_keyed("validate", cfg, &format!("{convention:?}"))?;
    let rows = report.checks.iter().map(|c| {
        vec![
            c.name.clone(),
            num(c.max_error),
            num(c.tolerance),
            c.passed.to_string(),
            c.detail.clone(),
        ]
    });
    out.write_csv("validate.csv", &["check", "max_error", "tolerance", "passed", "detail"], rows)?;
    out.write_metadata(&report)?;
    Ok((report, out.dir().to_path_buf()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(convention: MultiplicityConvention) -> ValidationReport {
        run_validation(&ValidateOptions {
            convention,
            seed: 7,
            balance_mcs: 200_000,
        })
        .unwrap()
    }

    #[test]
    fn factorial_convention_passes() {
        let r = quick(MultiplicityConvention::Factorial);
        for c in &r.checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn occupation_product_fails_normalization() {
        let r = quick(MultiplicityConvention::OccupationProduct);
        assert!(!r.check("normalization").unwrap().passed);
        assert!(!r.all_passed());
    }
}
