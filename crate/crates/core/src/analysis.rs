//! Order parameters, the paramagnetic reference law, phase classification
//! and `(alpha, T)` sweeps.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_replicas_sequential, EnergyMode, MCParams};
use crate::error::{invalid, Error, Result};
use crate::fock::{binomial, patterns_for_alpha, ConfigurationSpace, PhotonConfiguration, SpinConfiguration, TargetSet};
use crate::matrix::haar_random_unitary;
use crate::model::{Landscape, PatternTensor, PhotonicModel, PrepKind, ScatteringSpec};
use crate::seed::{derive_rng, derive_seed};

/// Fewest replicas accepted by [`classify_phase`].
pub const MIN_REPLICAS: usize = 30;

/// Kurtosis of `P(q)` above which a point counts as paramagnetic.
pub const PM_KURTOSIS_CUTOFF: f64 = 2.65;

/// Width of the `|m|` histogram bins.
pub const ABS_M_BIN_WIDTH: f64 = 0.02;

/// Number of `|m|` bins, covering `[0, 1.2]`.
pub const ABS_M_BINS: usize = 60;

/// `m_k(sigma) = sum_x X^{(k)}_x prod_i sigma_{x_i}`.
pub fn magnetization(
    sigma: &SpinConfiguration,
    patterns: &PatternTensor,
    space: &ConfigurationSpace,
    k: usize,
) -> Result<Complex64> {
    if sigma.len() != space.modes() {
        return Err(Error::Dimension("spin layer length differs from mode count".into()));
    }
    patterns
        .contract(space, sigma.as_slice(), k)
        .ok_or_else(|| invalid(format!("configuration ordinal {k} is not a target")))
}

/// Magnetizations of every target. Each equals the output amplitude
/// `<k|psi_{S,sigma}>`, so the model's production route is used.
pub fn target_magnetizations(
    model: &PhotonicModel,
    sigma: &SpinConfiguration,
    targets: &TargetSet,
) -> Result<Vec<Complex64>> {
    targets
        .members()
        .iter()
        .map(|&k| model.amplitude(sigma, k))
        .collect()
}

/// `q_ab = (1/M) sum_i sigma^a_i sigma^b_i`.
pub fn overlap(a: &SpinConfiguration, b: &SpinConfiguration) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Dimension(format!(
            "overlap of configurations with {} and {} spins",
            a.len(),
            b.len()
        )));
    }
    let dot: i64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| i64::from(x * y))
        .sum();
    Ok(dot as f64 / a.len() as f64)
}

/// Overlaps of all pairs `a < b`.
pub fn pairwise_overlaps(states: &[SpinConfiguration]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(states.len() * states.len().saturating_sub(1) / 2);
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            out.push(overlap(a, b)?);
        }
    }
    Ok(out)
}

/// Closed-form disorder average of `P(|m|)` as printed, before normalization:
/// `2/(M+1) e^{-mM} + (M-1)/(M+1) 2 m M^2 K_0(sqrt(2) m M)`.
pub fn pm_reference_pdf_raw(m_abs: f64, modes: usize) -> f64 {
    if m_abs < 0.0 || modes == 0 {
        return 0.0;
    }
    let mm = modes as f64;
    let bunched = 2.0 / (mm + 1.0) * (-m_abs * mm).exp();
    let x = std::f64::consts::SQRT_2 * m_abs * mm;
    let spread = if x > 0.0 {
        (mm - 1.0) / (mm + 1.0) * 2.0 * m_abs * mm * mm * puruspe::Kn(0, x)
    } else {
        0.0
    };
    bunched + spread
}

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut total = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        total += w * f(a + i as f64 * h);
    }
    total * h / 3.0
}

/// The reference law divided by its numerical integral over `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmReference {
    modes: usize,
    raw_integral: f64,
}

impl PmReference {
    pub fn new(modes: usize) -> Result<Self> {
        if modes < 2 {
            return Err(invalid("reference law needs at least two modes"));
        }
        let upper = 60.0 / modes as f64;
        let raw_integral = simpson(|m| pm_reference_pdf_raw(m, modes), 0.0, upper, 200_000);
        Ok(Self { modes, raw_integral })
    }

    /// Integral of the unnormalized closed form.
    pub fn raw_integral(&self) -> f64 {
        self.raw_integral
    }

    /// Factor applied to the closed form.
    pub fn normalization_factor(&self) -> f64 {
        1.0 / self.raw_integral
    }

    pub fn pdf(&self, m_abs: f64) -> f64 {
        pm_reference_pdf_raw(m_abs, self.modes) / self.raw_integral
    }

    /// Probability of `[lo, hi)`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        simpson(|m| self.pdf(m), lo.max(0.0), hi.max(0.0), 400)
    }

    /// Probability of each bin of `hist`.
    pub fn bin_masses(&self, hist: &Histogram) -> Vec<f64> {
        (0..hist.bins())
            .map(|i| {
                let lo = hist.lo() + i as f64 * hist.width();
                self.mass(lo, lo + hist.width())
            })
            .collect()
    }

    /// TVD between a normalized histogram and the law; reference mass outside
    /// the histogram range counts fully.
    pub fn tvd(&self, hist: &Histogram) -> f64 {
        let masses = self.bin_masses(hist);
        let inside: f64 = masses.iter().sum();
        let empirical = hist.masses();
        let diff: f64 = empirical.iter().zip(&masses).map(|(a, b)| (a - b).abs()).sum();
        0.5 * (diff + (1.0 - inside).max(0.0))
    }
}

/// `|m_k|` at infinite temperature: fresh Haar `S` every `per_unitary`
/// samples, uniform random `sigma` and uniform random `k in C`.
pub fn pm_samples(
    modes: usize,
    injection: &PhotonConfiguration,
    prep: PrepKind,
    n_samples: usize,
    per_unitary: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_samples == 0 || per_unitary == 0 {
        return Err(invalid("sample counts must be positive"));
    }
    let n_unitaries = n_samples.div_ceil(per_unitary);
    let chunks = (0..n_unitaries)
        .into_par_iter()
        .map(|u| {
            let s = haar_random_unitary(modes, derive_seed(seed, "pm-disorder", &[u as u64]))?;
            let spec = ScatteringSpec::new(s, prep.build(modes)?, injection.clone())?;
            let model = PhotonicModel::new(spec)?;
            let mut rng = derive_rng(seed, "pm-samples", &[u as u64]);
            let count = per_unitary.min(n_samples - u * per_unitary);
            (0..count)
                .map(|_| {
                    let sigma = SpinConfiguration::random(modes, &mut rng);
                    let k = rng.random_range(0..model.space().len());
                    model.amplitude(&sigma, k).map(|a| a.norm())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// How the retrieval threshold `|m|_{N_P}` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `1/pi`.
    #[default]
    Fixed,
    /// Empirical `1 - N_P / 2^{M-1}` quantile of high-temperature samples.
    Quantile,
}

/// Resolved retrieval threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetrievalThreshold {
    pub value: f64,
    pub mode: ThresholdMode,
    /// Quantile level, quantile mode only.
    pub level: Option<f64>,
    /// Quantile level at or below zero.
    pub degenerate: bool,
}

/// The fixed threshold `1/pi`.
pub fn fixed_threshold() -> f64 {
    std::f64::consts::FRAC_1_PI
}

/// `1 - N_P / 2^{M-1}`.
pub fn quantile_level(n_p: usize, modes: usize) -> f64 {
    1.0 - n_p as f64 / 2f64.powi(modes as i32 - 1)
}

/// Retrieval threshold. Quantile mode reads `calibration`, a sample of
/// high-temperature `|m|` values.
pub fn retrieval_threshold(
    n_p: usize,
    modes: usize,
    mode: ThresholdMode,
    calibration: Option<&[f64]>,
) -> Result<RetrievalThreshold> {
    if n_p == 0 || modes == 0 {
        return Err(invalid("threshold needs N_P >= 1 and M >= 1"));
    }
    match mode {
        ThresholdMode::Fixed => Ok(RetrievalThreshold {
            value: fixed_threshold(),
            mode,
            level: None,
            degenerate: false,
        }),
        ThresholdMode::Quantile => {
            let level = quantile_level(n_p, modes);
            let samples = calibration
                .filter(|s| !s.is_empty())
                .ok_or_else(|| invalid("quantile threshold needs calibration samples"))?;
            let mut sorted = samples.to_vec();
            sorted.sort_by(f64::total_cmp);
            let degenerate = level <= 0.0;
            let value = if degenerate {
                sorted[0]
            } else {
                let idx = ((level * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
                sorted[idx]
            };
            Ok(RetrievalThreshold {
                value,
                mode,
                level: Some(level),
                degenerate,
            })
        }
    }
}

/// Fixed-width histogram of counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    lo: f64,
    width: f64,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, width: f64, bins: usize) -> Result<Self> {
        if bins == 0 || width.is_nan() || width <= 0.0 || !lo.is_finite() {
            return Err(invalid("histogram needs bins > 0 and a positive width"));
        }
        Ok(Self {
            lo,
            width,
            counts: vec![0; bins],
        })
    }

    /// `|m|` bins of width 0.02 on `[0, 1.2]`.
    pub fn abs_m() -> Self {
        Self::new(0.0, ABS_M_BIN_WIDTH, ABS_M_BINS).expect("static layout")
    }

    /// One bin per attainable overlap `-1, -1 + 2/M, ..., 1`.
    pub fn overlap(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("overlap histogram needs M >= 1"));
        }
        let m = modes as f64;
        Self::new(-1.0 - 1.0 / m, 2.0 / m, modes + 1)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width
    }

    fn index(&self, v: f64) -> usize {
        let raw = ((v - self.lo) / self.width).floor();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.counts.len() - 1)
        }
    }

    /// Adds `v`; values outside the range go to the edge bins.
    pub fn add(&mut self, v: f64) {
        let i = self.index(v);
        self.counts[i] += 1;
    }

    pub fn extend(&mut self, values: impl IntoIterator<Item = f64>) {
        for v in values {
            self.add(v);
        }
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.counts.len() != other.counts.len() || self.lo != other.lo || self.width != other.width {
            return Err(invalid("cannot merge histograms with different layouts"));
        }
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// Counts divided by their total; all zeros when empty.
    pub fn masses(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / total as f64).collect()
    }
}

/// `<(q - <q>)^4> / <(q - <q>)^2>^2`; `None` for fewer than two samples or
/// zero variance.
pub fn kurtosis(samples: &[f64]) -> Option<f64> {
    if samples.len() < 2 || samples.iter().all(|&v| v == samples[0]) {
        return None;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / n;
    let m4 = samples.iter().map(|q| (q - mean).powi(4)).sum::<f64>() / n;
    if m2 <= 1e-300 {
        return None;
    }
    Some(m4 / (m2 * m2))
}

/// Mass at `|q| <= 1/M` for independent uniform spins.
pub fn pm_zero_overlap_mass(modes: usize) -> f64 {
    let m = modes as f64;
    (0..=modes)
        .filter(|&agree| {
            let q = (2.0 * agree as f64 - m) / m;
            q.abs() <= 1.0 / m + 1e-12
        })
        .map(|agree| binomial(modes, agree).unwrap_or(0) as f64 / 2f64.powi(modes as i32))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PhaseLabel {
    MR,
    SG,
    PM,
}

impl PhaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseLabel::MR => "MR",
            PhaseLabel::SG => "SG",
            PhaseLabel::PM => "PM",
        }
    }
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of [`classify_phase`] with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseClassification {
    pub label: PhaseLabel,
    /// MR criterion met while `P(|m| > threshold) < 1`: partial retrieval.
    pub coexistence: bool,
    /// Mass at `|q| <= 1/M` is positive and not below either neighbouring band.
    pub zero_overlap_peak: bool,
    /// `P(|m| > threshold)`.
    pub retrieval_mass: f64,
    pub kurtosis: Option<f64>,
    /// Mass at `|q| <= 1/M`.
    pub zero_overlap_mass: f64,
    /// The same mass for independent uniform spins.
    pub pm_zero_overlap_mass: f64,
}

impl PhaseClassification {
    /// Retrieval together with a residual `q = 0` peak.
    pub fn coexistence_signature(&self) -> bool {
        self.coexistence && self.zero_overlap_peak
    }
}

/// Decision rule: MR if `P(|m| > threshold) >= 1/N_P`, otherwise PM if the
/// kurtosis of `q` exceeds 2.65, otherwise SG.
///
/// `abs_m` pools `|m_k|` over replicas and targets; `q` pools the pairwise
/// overlaps of the same replicas.
pub fn classify_phase(
    abs_m: &[f64],
    q: &[f64],
    n_replicas: usize,
    n_p: usize,
    threshold: f64,
    modes: usize,
) -> Result<PhaseClassification> {
    if n_replicas < MIN_REPLICAS {
        return Err(Error::InsufficientSamples(format!(
            "{n_replicas} replicas, at least {MIN_REPLICAS} required"
        )));
    }
    if n_p == 0 || modes == 0 {
        return Err(invalid("classification needs N_P >= 1 and M >= 1"));
    }
    if abs_m.is_empty() || q.is_empty() {
        return Err(Error::InsufficientSamples("empty magnetization or overlap sample".into()));
    }
    let retrieval_mass = abs_m.iter().filter(|&&m| m > threshold).count() as f64 / abs_m.len() as f64;
    let kurt = kurtosis(q);
    let retrieved = retrieval_mass >= 1.0 / n_p as f64;
    let label = if retrieved {
        PhaseLabel::MR
    } else if kurt.is_some_and(|k| k > PM_KURTOSIS_CUTOFF) {
        PhaseLabel::PM
    } else {
        PhaseLabel::SG
    };

    let band = 1.0 / modes as f64;
    let eps = 1e-12;
    let frac = |pred: &dyn Fn(f64) -> bool| q.iter().filter(|&&v| pred(v)).count() as f64 / q.len() as f64;
    let zero_overlap_mass = frac(&|v| v.abs() <= band + eps);
    let upper = frac(&|v| v > band + eps && v <= 3.0 * band + eps);
    let lower = frac(&|v| v < -band - eps && v >= -3.0 * band - eps);
    let zero_overlap_peak = zero_overlap_mass > 0.0 && zero_overlap_mass >= upper && zero_overlap_mass >= lower;

    Ok(PhaseClassification {
        label,
        coexistence: retrieved && retrieval_mass < 1.0,
        zero_overlap_peak,
        retrieval_mass,
        kurtosis: kurt,
        zero_overlap_mass,
        pm_zero_overlap_mass: pm_zero_overlap_mass(modes),
    })
}

/// One `(alpha, T)` grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub temperature: f64,
}

/// Inputs of [`sweep_phase_diagram`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub modes: usize,
    pub prep: PrepKind,
    pub injection: PhotonConfiguration,
    pub grid: Vec<GridPoint>,
    pub n_disorder: usize,
    pub n_replicas: usize,
    pub n_steps: usize,
    pub burn_in: usize,
    pub energy_mode: EnergyMode,
    pub reestimate_incumbent: bool,
    pub threshold: ThresholdMode,
    pub master_seed: u64,
}

impl SweepConfig {
    pub fn photons(&self) -> usize {
        self.injection.n_photons()
    }

    /// Checks ranges and resolves `N_P` for every grid point.
    pub fn resolve_patterns(&self) -> Result<Vec<usize>> {
        if self.grid.is_empty() {
            return Err(invalid("empty grid"));
        }
        if self.n_disorder == 0 || self.n_replicas == 0 {
            return Err(invalid("need at least one disorder realization and one replica"));
        }
        self.injection.check_modes(self.modes)?;
        let space_len = binomial(self.modes + self.photons() - 1, self.photons())
            .ok_or_else(|| invalid("configuration space too large"))?;
        self.grid
            .iter()
            .map(|p| {
                if !p.alpha.is_finite() || p.alpha <= 0.0 {
                    return Err(invalid(format!("alpha {} must be positive", p.alpha)));
                }
                let n_p = patterns_for_alpha(p.alpha, self.modes, self.photons());
                if n_p < 1 {
                    return Err(invalid(format!(
                        "alpha {} gives N_P < 1 at M = {}",
                        p.alpha, self.modes
                    )));
                }
                if n_p as u64 > space_len {
                    return Err(invalid(format!(
                        "alpha {} asks for {n_p} targets but only {space_len} configurations exist",
                        p.alpha
                    )));
                }
                Ok(n_p)
            })
            .collect()
    }
}

/// Result of one disorder realization at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationResult {
    pub realization: usize,
    pub threshold: RetrievalThreshold,
    /// `None` with fewer than [`MIN_REPLICAS`] replicas.
    pub classification: Option<PhaseClassification>,
    pub abs_m: Histogram,
    pub q: Histogram,
}

/// Aggregated results at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub alpha: f64,
    pub alpha_realized: f64,
    pub temperature: f64,
    pub n_p: usize,
    pub realizations: Vec<RealizationResult>,
    pub abs_m: Histogram,
    pub q: Histogram,
}

impl PointResult {
    /// Label counts over classified realizations.
    pub fn votes(&self) -> BTreeMap<PhaseLabel, usize> {
        let mut votes = BTreeMap::new();
        for r in &self.realizations {
            if let Some(c) = &r.classification {
                *votes.entry(c.label).or_insert(0) += 1;
            }
        }
        votes
    }

    /// Most frequent label; ties go to the earlier of MR, SG, PM.
    pub fn majority(&self) -> Option<PhaseLabel> {
        let votes = self.votes();
        let best = votes.values().copied().max()?;
        votes.into_iter().find(|&(_, n)| n == best).map(|(l, _)| l)
    }

    /// Fraction of classified realizations satisfying `pred`.
    pub fn fraction(&self, pred: impl Fn(&PhaseClassification) -> bool) -> f64 {
        let classified: Vec<_> = self.realizations.iter().filter_map(|r| r.classification.as_ref()).collect();
        if classified.is_empty() {
            return 0.0;
        }
        classified.iter().filter(|c| pred(c)).count() as f64 / classified.len() as f64
    }
}

/// Direction of a grid line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "along", rename_all = "snake_case")]
pub enum GridLine {
    /// Fixed `alpha`, varying `T`.
    Temperature { alpha: f64 },
    /// Fixed `T`, varying `alpha`.
    Alpha { temperature: f64 },
}

/// Disorder-averaged location of a label change along a grid line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Boundary {
    pub line: GridLine,
    pub from: PhaseLabel,
    pub to: PhaseLabel,
    pub mean: f64,
    pub sem: f64,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub points: Vec<PointResult>,
    pub boundaries: Vec<Boundary>,
}

/// Exact `|m|` sample of one `(S, K)` over every spin layer up to global
/// flip (random layers beyond 14 modes), used for quantile thresholds.
fn realization_calibration(model: &PhotonicModel, targets: &TargetSet, seed: u64) -> Result<Vec<f64>> {
    let m = model.modes();
    let layers: Vec<SpinConfiguration> = if m <= 14 {
        (0..1u64 << (m - 1)).map(|c| SpinConfiguration::from_code(c, m)).collect()
    } else {
        let mut rng = derive_rng(seed, "calibration", &[]);
        (0..1 << 14).map(|_| SpinConfiguration::random(m, &mut rng)).collect()
    };
    let mut out = Vec::with_capacity(layers.len() * targets.len());
    for sigma in &layers {
        for a in target_magnetizations(model, sigma, targets)? {
            out.push(a.norm());
        }
    }
    Ok(out)
}

fn run_unit(cfg: &SweepConfig, point: usize, n_p: usize, realization: usize) -> Result<RealizationResult> {
    let master = cfg.master_seed;
    let r = realization as u64;
    let gp = cfg.grid[point];
    let s = haar_random_unitary(cfg.modes, derive_seed(master, "disorder", &[r]))?;
    let spec = ScatteringSpec::new(s, cfg.prep.build(cfg.modes)?, cfg.injection.clone())?;
    let model = PhotonicModel::new(spec)?;
    let mut krng = derive_rng(master, "targets", &[r, n_p as u64]);
    let targets = TargetSet::uniform_random(model.space(), n_p, &mut krng)?;
    let threshold = match cfg.threshold {
        ThresholdMode::Fixed => retrieval_threshold(n_p, cfg.modes, ThresholdMode::Fixed, None)?,
        ThresholdMode::Quantile => {
            let cal = realization_calibration(&model, &targets, derive_seed(master, "calibration", &[r]))?;
            retrieval_threshold(n_p, cfg.modes, ThresholdMode::Quantile, Some(&cal))?
        }
    };
    let landscape = Landscape::new(&model, &targets)?;
    let params = MCParams {
        temperature: gp.temperature,
        n_steps: cfg.n_steps,
        burn_in: cfg.burn_in,
        energy_mode: cfg.energy_mode,
        seed: derive_seed(master, "replicas", &[point as u64, r]),
        reestimate_incumbent: cfg.reestimate_incumbent,
    };
    let ensemble = run_replicas_sequential(&landscape, &params, cfg.n_replicas)?;
    let finals = ensemble.final_states();
    let mut abs_m = Vec::with_capacity(finals.len() * targets.len());
    for sigma in &finals {
        abs_m.extend(target_magnetizations(&model, sigma, &targets)?.iter().map(|a| a.norm()));
    }
    let q = pairwise_overlaps(&finals)?;
    let mut m_hist = Histogram::abs_m();
    m_hist.extend(abs_m.iter().copied());
    let mut q_hist = Histogram::overlap(cfg.modes)?;
    q_hist.extend(q.iter().copied());
    let classification = if finals.len() >= MIN_REPLICAS {
        Some(classify_phase(&abs_m, &q, finals.len(), n_p, threshold.value, cfg.modes)?)
    } else {
        None
    };
    Ok(RealizationResult {
        realization,
        threshold,
        classification,
        abs_m: m_hist,
        q: q_hist,
    })
}

/// Runs every `(grid point, realization)` unit in parallel on the current
/// rayon pool. Realization `r` uses the same Haar `S` at every grid point;
/// its target set depends only on `(r, N_P)`.
pub fn sweep_phase_diagram(cfg: &SweepConfig) -> Result<PhaseDiagram> {
    let n_ps = cfg.resolve_patterns()?;
    let units: Vec<(usize, usize)> = (0..cfg.grid.len())
        .flat_map(|p| (0..cfg.n_disorder).map(move |r| (p, r)))
        .collect();
    let results = units
        .par_iter()
        .map(|&(p, r)| run_unit(cfg, p, n_ps[p], r))
        .collect::<Result<Vec<_>>>()?;
    let mut results = results.into_iter();
    let mut points = Vec::with_capacity(cfg.grid.len());
    for (p, gp) in cfg.grid.iter().enumerate() {
        let realizations: Vec<_> = results.by_ref().take(cfg.n_disorder).collect();
        let mut abs_m = Histogram::abs_m();
        let mut q = Histogram::overlap(cfg.modes)?;
        for r in &realizations {
            abs_m.merge(&r.abs_m)?;
            q.merge(&r.q)?;
        }
        points.push(PointResult {
            alpha: gp.alpha,
            alpha_realized: n_ps[p] as f64 / (cfg.modes as f64).powi(cfg.photons() as i32),
            temperature: gp.temperature,
            n_p: n_ps[p],
            realizations,
            abs_m,
            q,
        });
    }
    let boundaries = extract_boundaries(&points, cfg.n_disorder);
    Ok(PhaseDiagram { points, boundaries })
}

fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Midpoints between consecutive grid points whose labels differ, per
/// realization, averaged over realizations with the standard error of the
/// mean. Only the first change of each `(from, to)` pair per realization
/// and line is used.
pub fn extract_boundaries(points: &[PointResult], n_disorder: usize) -> Vec<Boundary> {
    let mut lines: Vec<(GridLine, Vec<(f64, usize)>)> = Vec::new();
    let key = |v: f64| v.to_bits();
    let mut by_alpha: BTreeMap<u64, Vec<(f64, usize)>> = BTreeMap::new();
    let mut by_t: BTreeMap<u64, Vec<(f64, usize)>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        by_alpha.entry(key(p.alpha)).or_default().push((p.temperature, i));
        by_t.entry(key(p.temperature)).or_default().push((p.alpha, i));
    }
    for (a, pts) in by_alpha {
        lines.push((GridLine::Temperature { alpha: f64::from_bits(a) }, pts));
    }
    for (t, pts) in by_t {
        lines.push((GridLine::Alpha { temperature: f64::from_bits(t) }, pts));
    }

    let mut out = Vec::new();
    for (line, mut pts) in lines {
        if pts.len() < 2 {
            continue;
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut found: BTreeMap<(PhaseLabel, PhaseLabel), Vec<f64>> = BTreeMap::new();
        for r in 0..n_disorder {
            let mut seen = Vec::new();
            for w in pts.windows(2) {
                let label = |idx: usize| {
                    points[idx]
                        .realizations
                        .get(r)
                        .and_then(|x| x.classification.as_ref())
                        .map(|c| c.label)
                };
                if let (Some(a), Some(b)) = (label(w[0].1), label(w[1].1)) {
                    if a != b && !seen.contains(&(a, b)) {
                        seen.push((a, b));
                        found.entry((a, b)).or_default().push(0.5 * (w[0].0 + w[1].0));
                    }
                }
            }
        }
        for ((from, to), mids) in found {
            let (mean, sem) = mean_sem(&mids);
            out.push(Boundary {
                line,
                from,
                to,
                mean,
                sem,
                realizations: mids.len(),
            });
        }
    }
    out
}
