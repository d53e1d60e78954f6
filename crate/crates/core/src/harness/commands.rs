use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{
    pairwise_overlaps, sweep_phase_diagram, target_magnetizations, Histogram,
    PhaseDiagram, SweepConfig,
};
use crate::dynamics::{autocorrelation_curve, first_crossing_below, run_replicas, MCParams};
use crate::error::{Error, Result};
use crate::fock::{PhotonConfiguration, SpinConfiguration, TargetSet};
use crate::harness::config::RunConfig;
use crate::harness::output::{num, RunOutput};
use crate::matrix::hadamard_row_unitary;
use crate::model::{
    empirical_distribution, sample_counts_seeded, total_variation_distance, Landscape, PhotonicModel,
    ScatteringSpec,
};
use crate::seed::derive_seed;

/// Level used to report decorrelation lags.
pub const DECORRELATION_LEVEL: f64 = 0.2;

/// Layers beyond which `distribution` refuses to enumerate every spin setting.
pub const MAX_ENUMERATED_LAYERS: u64 = 1 << 20;

fn build_model(cfg: &RunConfig) -> Result<PhotonicModel> {
    let spec = ScatteringSpec::new(cfg.scattering()?, cfg.prep()?, cfg.injection()?)?;
    PhotonicModel::new(spec)
}

fn spin_layers(cfg: &RunConfig) -> Result<Vec<SpinConfiguration>> {
    match &cfg.distribution.spins {
        Some(list) => list.iter().map(|s| s.parse()).collect(),
        None => {
            let m = cfg.modes;
            if m >= 64 || (1u64 << m) > MAX_ENUMERATED_LAYERS {
                return Err(Error::Config(format!(
                    "enumerating 2^{m} spin layers exceeds the limit of 2^20; list distribution.spins"
                )));
            }
            Ok((0..1u64 << m).map(|c| SpinConfiguration::from_code(c, m)).collect())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributionReport {
    #[serde(skip)]
    pub dir: PathBuf,
    pub settings: usize,
    pub outcomes: usize,
    /// `max |sum_k P(k) - 1|` over settings.
    pub max_normalization_error: f64,
    /// Mean TVD between sampled and exact distributions, sampled mode only.
    pub mean_tvd: Option<f64>,
}

/// Exact output distribution for each requested spin layer, with shot-noise
/// samples and their TVD in sampled mode.
pub fn cmd_distribution(cfg: &RunConfig) -> Result<DistributionReport> {
    cfg.validate()?;
    let model = build_model(cfg)?;
    let layers = spin_layers(cfg)?;
    let events = match cfg.energy_mode() {
        crate::dynamics::EnergyMode::Exact => None,
        crate::dynamics::EnergyMode::Sampled { events } => Some(events),
    };
    let out = RunOutput::create("distribution", cfg)?;
    let mut rows = Vec::new();
    let mut tvd_rows = Vec::new();
    let mut max_err = 0.0f64;
    let mut tvds = Vec::new();
    for sigma in &layers {
        let p = model.output_distribution(sigma)?;
        max_err = max_err.max((p.iter().sum::<f64>() - 1.0).abs());
        let sampled = match events {
            Some(n) => {
                let counts = sample_counts_seeded(&p, n, derive_seed(cfg.seed, "shots", &[sigma.code()]))?;
                let hat = empirical_distribution(&counts);
                let tvd = total_variation_distance(&hat, &p)?;
                tvds.push(tvd);
                tvd_rows.push(vec![sigma.to_string(), num(tvd)]);
                Some(hat)
            }
            None => None,
        };
        for (k, x) in model.space().configs().iter().enumerate() {
            let mut row = vec![sigma.to_string(), x.to_string(), num(p[k])];
            if let Some(hat) = &sampled {
                row.push(num(hat[k]));
            }
            rows.push(row);
        }
    }
    let header: &[&str] = if events.is_some() {
        &["spins", "outcome", "p_exact", "p_sampled"]
    } else {
        &["spins", "outcome", "p_exact"]
    };
    out.write_csv("distribution.csv", header, rows)?;
    if events.is_some() {
        out.write_csv("tvd.csv", &["spins", "tvd"], tvd_rows)?;
    }
    let report = DistributionReport {
        dir: out.dir().to_path_buf(),
        settings: layers.len(),
        outcomes: model.space().len(),
        max_normalization_error: max_err,
        mean_tvd: (!tvds.is_empty()).then(|| tvds.iter().sum::<f64>() / tvds.len() as f64),
    };
    out.write_metadata(&report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct McRun {
    pub n_p: usize,
    pub temperature: f64,
    pub acceptance_rate: f64,
    pub mean_final_energy: f64,
    /// First lag with `F_self < 0.2`, per replica.
    pub decorrelation_lags: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    #[serde(skip)]
    pub dir: PathBuf,
    pub runs: Vec<McRun>,
}

/// Metropolis runs for every `(K, T)`; energy traces and `F_self` tables.
pub fn cmd_mc(cfg: &RunConfig) -> Result<McReport> {
    cfg.validate()?;
    let model = build_model(cfg)?;
    let sets = cfg.target_sets(model.space())?;
    let out = RunOutput::create("mc", cfg)?;
    let d = &cfg.dynamics;
    let mut energy_rows = Vec::new();
    let mut f_rows = Vec::new();
    let mut runs = Vec::new();
    for (si, targets) in sets.iter().enumerate() {
        let landscape = Landscape::new(&model, targets)?;
        for (ti, &t) in d.temperatures.iter().enumerate() {
            let mut params = MCParams::new(t, d.n_steps, derive_seed(cfg.seed, "mc", &[si as u64, ti as u64]))
                .with_energy_mode(cfg.energy_mode());
            if let Some(b) = d.burn_in {
                params.burn_in = b;
            }
            params.reestimate_incumbent = d.reestimate_incumbent;
            let ensemble = run_replicas(&landscape, &params, d.n_replicas)?;
            let max_lag = d.max_lag.min(d.n_steps - params.burn_in);
            let mut accepted = 0u64;
            let mut proposals = 0u64;
            let mut finals = 0.0;
            let mut lags = Vec::new();
            for (r, traj) in ensemble.trajectories().iter().enumerate() {
                accepted += traj.acceptance_count();
                proposals += traj.proposals();
                finals += traj.energies()[traj.len() - 1];
                for (step, e) in traj.energies().iter().enumerate() {
                    energy_rows.push(vec![
                        targets.len().to_string(),
                        num(t),
                        r.to_string(),
                        step.to_string(),
                        num(*e),
                    ]);
                }
                let curve = autocorrelation_curve(traj, max_lag)?;
                lags.push(first_crossing_below(&curve, DECORRELATION_LEVEL));
                for (tau, f) in curve.iter().enumerate() {
                    f_rows.push(vec![
                        targets.len().to_string(),
                        num(t),
                        r.to_string(),
                        tau.to_string(),
                        num(*f),
                    ]);
                }
            }
            runs.push(McRun {
                n_p: targets.len(),
                temperature: t,
                acceptance_rate: accepted as f64 / proposals.max(1) as f64,
                mean_final_energy: finals / ensemble.len() as f64,
                decorrelation_lags: lags,
            });
        }
    }
    out.write_csv("energies.csv", &["n_p", "temperature", "replica", "mcs", "energy"], energy_rows)?;
    out.write_csv("autocorrelation.csv", &["n_p", "temperature", "replica", "tau", "f_self"], f_rows)?;
    let report = McReport {
        dir: out.dir().to_path_buf(),
        runs,
    };
    out.write_metadata(&report)?;
    Ok(report)
}

/// The sweep configuration described by `cfg`.
pub fn sweep_config(cfg: &RunConfig) -> Result<SweepConfig> {
    let p = &cfg.phase_diagram;
    Ok(SweepConfig {
        modes: cfg.modes,
        prep: cfg.prep,
        injection: cfg.injection()?,
        grid: p.grid(),
        n_disorder: p.n_disorder,
        n_replicas: p.n_replicas,
        n_steps: p.n_steps,
        burn_in: p.burn_in.unwrap_or(p.n_steps / 2),
        energy_mode: cfg.energy_mode(),
        reestimate_incumbent: cfg.dynamics.reestimate_incumbent,
        threshold: p.threshold,
        master_seed: cfg.seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub alpha: f64,
    pub alpha_realized: f64,
    pub temperature: f64,
    pub n_p: usize,
    pub votes: BTreeMap<String, usize>,
    pub majority: Option<String>,
    pub coexistence_fraction: f64,
    pub signature_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagramReport {
    #[serde(skip)]
    pub dir: PathBuf,
    pub points: Vec<PointSummary>,
    #[serde(skip)]
    pub diagram: PhaseDiagram,
}

/// Runs the sweep and writes labels, histograms and boundaries.
pub fn cmd_phase_diagram(cfg: &RunConfig) -> Result<PhaseDiagramReport> {
    cfg.validate()?;
    let sweep = sweep_config(cfg)?;
    let diagram = sweep_phase_diagram(&sweep)?;
    let out = RunOutput::create("phase-diagram", cfg)?;

    let mut label_rows = Vec::new();
    let mut m_rows = Vec::new();
    let mut q_rows = Vec::new();
    let mut summaries = Vec::new();
    for (pi, p) in diagram.points.iter().enumerate() {
        for r in &p.realizations {
            let c = r.classification.as_ref();
            label_rows.push(vec![
                pi.to_string(),
                num(p.alpha),
                num(p.temperature),
                r.realization.to_string(),
                c.map_or("unclassified".into(), |c| c.label.to_string()),
                c.map_or(String::new(), |c| c.coexistence.to_string()),
                c.map_or(String::new(), |c| c.zero_overlap_peak.to_string()),
                c.map_or(String::new(), |c| num(c.retrieval_mass)),
                c.and_then(|c| c.kurtosis).map_or(String::new(), num),
                num(r.threshold.value),
            ]);
        }
        for (i, mass) in p.abs_m.masses().iter().enumerate() {
            let lo = p.abs_m.lo() + i as f64 * p.abs_m.width();
            m_rows.push(vec![pi.to_string(), num(lo), num(lo + p.abs_m.width()), num(*mass)]);
        }
        for (i, mass) in p.q.masses().iter().enumerate() {
            q_rows.push(vec![pi.to_string(), num(p.q.center(i)), num(*mass)]);
        }
        summaries.push(PointSummary {
            alpha: p.alpha,
            alpha_realized: p.alpha_realized,
            temperature: p.temperature,
            n_p: p.n_p,
            votes: p.votes().into_iter().map(|(l, n)| (l.to_string(), n)).collect(),
            majority: p.majority().map(|l| l.to_string()),
            coexistence_fraction: p.fraction(|c| c.coexistence),
            signature_fraction: p.fraction(|c| c.coexistence_signature()),
        });
    }
    let point_rows = summaries.iter().enumerate().map(|(i, s)| {
        vec![
            i.to_string(),
            num(s.alpha),
            num(s.alpha_realized),
            num(s.temperature),
            s.n_p.to_string(),
            s.votes.get("MR").copied().unwrap_or(0).to_string(),
            s.votes.get("SG").copied().unwrap_or(0).to_string(),
            s.votes.get("PM").copied().unwrap_or(0).to_string(),
            s.majority.clone().unwrap_or_default(),
            num(s.coexistence_fraction),
            num(s.signature_fraction),
        ]
    });
    out.write_csv(
        "points.csv",
        &[
            "point",
            "alpha",
            "alpha_realized",
            "temperature",
            "n_p",
            "votes_mr",
            "votes_sg",
            "votes_pm",
            "majority",
            "coexistence_fraction",
            "signature_fraction",
        ],
        point_rows,
    )?;
    out.write_csv(
        "labels.csv",
        &[
            "point",
            "alpha",
            "temperature",
            "realization",
            "label",
            "coexistence",
            "zero_overlap_peak",
            "retrieval_mass",
            "kurtosis",
            "threshold",
        ],
        label_rows,
    )?;
    out.write_csv("abs_m_histogram.csv", &["point", "bin_lo", "bin_hi", "mass"], m_rows)?;
    out.write_csv("q_histogram.csv", &["point", "q", "mass"], q_rows)?;
    let boundary_rows = diagram.boundaries.iter().map(|b| {
        let (line, value) = match b.line {
            crate::analysis::GridLine::Temperature { alpha } => ("temperature", alpha),
            crate::analysis::GridLine::Alpha { temperature } => ("alpha", temperature),
        };
        vec![
            line.to_string(),
            num(value),
            b.from.to_string(),
            b.to.to_string(),
            num(b.mean),
            num(b.sem),
            b.realizations.to_string(),
        ]
    });
    out.write_csv(
        "boundaries.csv",
        &["along", "fixed_value", "from", "to", "mean", "sem", "realizations"],
        boundary_rows,
    )?;
    let report = PhaseDiagramReport {
        dir: out.dir().to_path_buf(),
        points: summaries,
        diagram,
    };
    out.write_metadata(&report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct HopfieldRun {
    pub temperature: f64,
    /// Final `m` per replica and stored pattern.
    pub final_m: Vec<Vec<(f64, f64)>>,
    /// Replicas with `|m| > 0.9` on some pattern.
    pub retrieved_fraction: f64,
    /// Post-burn-in samples with `|Im m| < 0.05`.
    pub real_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopfieldReport {
    #[serde(skip)]
    pub dir: PathBuf,
    pub patterns: Vec<String>,
    pub runs: Vec<HopfieldRun>,
}

/// Width of the joint `(Re m, Im m)` bins.
pub const JOINT_BIN: f64 = 0.05;

/// Retrieval on an engineered `S` with prescribed `+-1` rows and bunched
/// stored patterns `(a, a)`.
pub fn cmd_hopfield(cfg: &RunConfig) -> Result<HopfieldReport> {
    cfg.validate()?;
    let h = &cfg.hopfield;
    let rows = cfg.hopfield_rows()?;
    if h.n_patterns > rows.len() {
        return Err(Error::Config(format!(
            "{} stored patterns need as many prescribed rows, got {}",
            h.n_patterns,
            rows.len()
        )));
    }
    let s = hadamard_row_unitary(cfg.modes, &rows, derive_seed(cfg.seed, "hadamard", &[]))?;
    let spec = ScatteringSpec::new(s, cfg.prep()?, cfg.injection()?)?;
    let model = PhotonicModel::new(spec)?;
    let patterns = (1..=h.n_patterns)
        .map(|a| PhotonConfiguration::bunched(a, cfg.photons, cfg.modes))
        .collect::<Result<Vec<_>>>()?;
    let targets = TargetSet::from_configs(model.space(), &patterns)?;
    let landscape = Landscape::new(&model, &targets)?;
    let out = RunOutput::create("hopfield", cfg)?;

    let mut temps = vec![h.temperature];
    temps.extend(h.control_temperature);
    let mut runs = Vec::new();
    let mut final_rows = Vec::new();
    let mut joint_rows = Vec::new();
    let mut q_rows = Vec::new();
    for (ti, &t) in temps.iter().enumerate() {
        let mut params = MCParams::new(t, h.n_steps, derive_seed(cfg.seed, "hopfield", &[ti as u64]))
            .with_energy_mode(cfg.energy_mode());
        if let Some(b) = h.burn_in {
            params.burn_in = b;
        }
        params.reestimate_incumbent = cfg.dynamics.reestimate_incumbent;
        let ensemble = run_replicas(&landscape, &params, h.n_replicas)?;
        let n_bins = (2.4 / JOINT_BIN).round() as usize;
        let mut joint = vec![vec![0u64; n_bins * n_bins]; patterns.len()];
        let bin = |v: f64| (((v + 1.2) / JOINT_BIN).floor().max(0.0) as usize).min(n_bins - 1);
        let mut samples = 0u64;
        let mut real = 0u64;
        let mut finals = Vec::new();
        for (r, traj) in ensemble.trajectories().iter().enumerate() {
            for step in traj.burn_in()..traj.len() {
                let sigma = SpinConfiguration::new(traj.spins_at(step).to_vec())?;
                for (pi, m) in target_magnetizations(&model, &sigma, &targets)?.iter().enumerate() {
                    joint[pi][bin(m.re) * n_bins + bin(m.im)] += 1;
                    samples += 1;
                    if m.im.abs() < 0.05 {
                        real += 1;
                    }
                }
            }
            let ms: Vec<Complex64> = target_magnetizations(&model, &traj.final_spins(), &targets)?;
            for (pi, m) in ms.iter().enumerate() {
                final_rows.push(vec![
                    num(t),
                    r.to_string(),
                    patterns[pi].to_string(),
                    num(m.re),
                    num(m.im),
                    num(m.norm()),
                ]);
            }
            finals.push(ms.iter().map(|m| (m.re, m.im)).collect::<Vec<_>>());
        }
        for (pi, grid) in joint.iter().enumerate() {
            let total: u64 = grid.iter().sum();
            for (i, &c) in grid.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let re = -1.2 + ((i / n_bins) as f64 + 0.5) * JOINT_BIN;
                let im = -1.2 + ((i % n_bins) as f64 + 0.5) * JOINT_BIN;
                joint_rows.push(vec![
                    num(t),
                    patterns[pi].to_string(),
                    num(re),
                    num(im),
                    num(c as f64 / total as f64),
                ]);
            }
        }
        let mut qh = Histogram::overlap(cfg.modes)?;
        qh.extend(pairwise_overlaps(&ensemble.final_states())?);
        for (i, mass) in qh.masses().iter().enumerate() {
            q_rows.push(vec![num(t), num(qh.center(i)), num(*mass)]);
        }
        let retrieved = finals
            .iter()
            .filter(|ms| ms.iter().any(|&(re, im)| re.hypot(im) > 0.9))
            .count();
        runs.push(HopfieldRun {
            temperature: t,
            retrieved_fraction: retrieved as f64 / finals.len() as f64,
            real_fraction: real as f64 / samples.max(1) as f64,
            final_m: finals,
        });
    }
    out.write_csv("final_m.csv", &["temperature", "replica", "pattern", "re", "im", "abs"], final_rows)?;
    out.write_csv("joint_m.csv", &["temperature", "pattern", "re", "im", "mass"], joint_rows)?;
    out.write_csv("q_histogram.csv", &["temperature", "q", "mass"], q_rows)?;
    let report = HopfieldReport {
        dir: out.dir().to_path_buf(),
        patterns: patterns.iter().map(|p| p.to_string()).collect(),
        runs,
    };
    out.write_metadata(&report)?;
    Ok(report)
}
