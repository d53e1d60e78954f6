//! Fock-basis combinatorics: photon configurations over optical modes, the
//! enumerated configuration space, target sets and Ising spin layers.
//!
//! Mode indices are 1-based wherever they cross the public boundary (parsing,
//! display, [`PhotonConfiguration::new`]) and 0-based inside the crate.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Sorted multiset of occupied modes for `n_ph` photons.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhotonConfiguration {
    modes: Vec<usize>,
}

impl PhotonConfiguration {
    /// Builds a configuration from 1-based mode indices over `m` modes. The
    /// indices may be given in any order.
    pub fn new(one_based: &[usize], m: usize) -> Result<Self> {
        if one_based.is_empty() {
            return Err(invalid("a photon configuration needs at least one photon"));
        }
        let mut modes = Vec::with_capacity(one_based.len());
        for &i in one_based {
            if i == 0 || i > m {
                return Err(Error::IndexOutOfRange { index: i, bound: m });
            }
            modes.push(i - 1);
        }
        modes.sort_unstable();
        Ok(Self { modes })
    }

    /// All photons in the single 1-based mode `mode`.
    pub fn bunched(mode: usize, n_photons: usize, m: usize) -> Result<Self> {
        Self::new(&vec![mode; n_photons], m)
    }

    pub(crate) fn from_sorted_zero_based(modes: Vec<usize>) -> Self {
        debug_assert!(modes.windows(2).all(|w| w[0] <= w[1]));
        Self { modes }
    }

    /// 0-based, non-decreasing mode indices.
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m + 1).collect()
    }

    pub fn n_photons(&self) -> usize {
        self.modes.len()
    }

    /// True if at least two photons share a mode.
    pub fn is_bunched(&self) -> bool {
        self.modes.windows(2).any(|w| w[0] == w[1])
    }

    /// Occupation numbers of the occupied modes, in mode order.
    pub fn occupations(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.modes.len() {
            let mut j = i;
            while j < self.modes.len() && self.modes[j] == self.modes[i] {
                j += 1;
            }
            out.push(j - i);
            i = j;
        }
        out
    }

    /// Checks that every mode fits in an `m`-mode device.
    pub fn check_modes(&self, m: usize) -> Result<()> {
        match self.modes.last() {
            Some(&last) if last >= m => Err(Error::IndexOutOfRange {
                index: last + 1,
                bound: m,
            }),
            _ => Ok(()),
        }
    }

    pub fn multiplicity(&self) -> u64 {
        multiplicity(self)
    }
}

impl fmt::Display for PhotonConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, m) in self.modes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", m + 1)?;
        }
        write!(f, ")")
    }
}

/// Parses `"(1,2)"`, `"1,2"` or `"1 2"` (1-based). The mode bound is not
/// known here; call [`PhotonConfiguration::check_modes`] afterwards.
impl FromStr for PhotonConfiguration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let inner = trimmed
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(trimmed);
        let mut modes = Vec::new();
        for tok in inner.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            let v: usize = tok.parse().map_err(|_| Error::Parse {
                line: 1,
                message: format!("bad mode index {tok:?}"),
            })?;
            if v == 0 {
                return Err(Error::IndexOutOfRange { index: 0, bound: usize::MAX });
            }
            modes.push(v);
        }
        if modes.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "empty photon configuration".into(),
            });
        }
        Self::new(&modes, usize::MAX)
    }
}

/// Multiplicity `prod_j n_j!` over the occupation numbers of `x`.
///
/// With this convention the bosonic amplitudes built from sub-matrix
/// permanents are normalized for any photon number. For two photons it
/// coincides with the plain occupation product.
pub fn multiplicity(x: &PhotonConfiguration) -> u64 {
    MultiplicityConvention::Factorial.of(x)
}

/// How the multiplicity `mu(x)` entering the amplitude formula is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplicityConvention {
    /// `prod_j n_j!` (normalizing).
    #[default]
    Factorial,
    /// `prod_j n_j`. Agrees with `Factorial` up to two photons per mode and
    /// breaks normalization beyond.
    OccupationProduct,
}

impl MultiplicityConvention {
    pub fn of(self, x: &PhotonConfiguration) -> u64 {
        x.occupations()
            .into_iter()
            .map(|n| match self {
                Self::Factorial => (1..=n as u64).product::<u64>(),
                Self::OccupationProduct => n as u64,
            })
            .product()
    }
}

/// All configurations of `n_ph` photons over `m` modes in lexicographic order.
#[derive(Debug, Clone)]
pub struct ConfigurationSpace {
    modes: usize,
    photons: usize,
    configs: Vec<PhotonConfiguration>,
    index: HashMap<PhotonConfiguration, usize>,
    multiplicities: Vec<u64>,
    convention: MultiplicityConvention,
}

impl ConfigurationSpace {
    pub fn enumerate(m: usize, n_photons: usize) -> Result<Self> {
        Self::with_convention(m, n_photons, MultiplicityConvention::Factorial)
    }

    pub fn with_convention(
        m: usize,
        n_photons: usize,
        convention: MultiplicityConvention,
    ) -> Result<Self> {
        if m == 0 {
            return Err(invalid("mode count must be at least 1"));
        }
        if n_photons == 0 {
            return Err(invalid("photon count must be at least 1"));
        }
        let expected = binomial(m + n_photons - 1, n_photons)
            .ok_or_else(|| invalid("configuration space too large"))?;
        if expected > 1 << 24 {
            return Err(invalid(format!(
                "configuration space of {expected} states is too large to enumerate"
            )));
        }
        let mut configs = Vec::with_capacity(expected as usize);
        let mut current = vec![0usize; n_photons];
        loop {
            configs.push(PhotonConfiguration::from_sorted_zero_based(current.clone()));
            // next non-decreasing tuple in lexicographic order
            let mut pos = n_photons;
            while pos > 0 && current[pos - 1] == m - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            let v = current[pos - 1] + 1;
            for slot in &mut current[pos - 1..] {
                *slot = v;
            }
        }
        debug_assert_eq!(configs.len() as u64, expected);
        let index = configs
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let multiplicities = configs.iter().map(|c| convention.of(c)).collect();
        Ok(Self {
            modes: m,
            photons: n_photons,
            configs,
            index,
            multiplicities,
            convention,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[PhotonConfiguration] {
        &self.configs
    }

    pub fn get(&self, ordinal: usize) -> Option<&PhotonConfiguration> {
        self.configs.get(ordinal)
    }

    pub fn index_of(&self, x: &PhotonConfiguration) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// Ordinal of `x`, or an error naming the offending configuration.
    pub fn require(&self, x: &PhotonConfiguration) -> Result<usize> {
        self.index_of(x).ok_or_else(|| {
            invalid(format!(
                "{x} is not a {}-photon configuration over {} modes",
                self.photons, self.modes
            ))
        })
    }

    /// Multiplicity of the configuration at `ordinal` under this space's convention.
    pub fn multiplicity(&self, ordinal: usize) -> u64 {
        self.multiplicities[ordinal]
    }

    pub fn convention(&self) -> MultiplicityConvention {
        self.convention
    }

    pub fn bunched_count(&self) -> usize {
        self.configs.iter().filter(|c| c.is_bunched()).count()
    }

    /// `M^{n_ph}`, the normalizer of the storage load.
    pub fn capacity_scale(&self) -> f64 {
        (self.modes as f64).powi(self.photons as i32)
    }
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u64)? / (i as u64 + 1);
    }
    Some(acc)
}

/// Subset `K` of output configurations, stored as sorted ordinals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSet {
    members: Vec<usize>,
    space_len: usize,
}

impl TargetSet {
    /// Builds a target set from ordinals. Duplicates and out-of-range
    /// ordinals are rejected; an empty set is allowed but degenerate.
    pub fn from_ordinals(space: &ConfigurationSpace, ordinals: &[usize]) -> Result<Self> {
        let mut members = ordinals.to_vec();
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate configuration in target set"));
        }
        if let Some(&last) = members.last() {
            if last >= space.len() {
                return Err(invalid(format!(
                    "target ordinal {last} outside a space of {}",
                    space.len()
                )));
            }
        }
        Ok(Self {
            members,
            space_len: space.len(),
        })
    }

    pub fn from_configs(space: &ConfigurationSpace, configs: &[PhotonConfiguration]) -> Result<Self> {
        let ordinals = configs
            .iter()
            .map(|c| space.require(c))
            .collect::<Result<Vec<_>>>()?;
        Self::from_ordinals(space, &ordinals)
    }

    /// `K = C`.
    pub fn full(space: &ConfigurationSpace) -> Self {
        Self {
            members: (0..space.len()).collect(),
            space_len: space.len(),
        }
    }

    /// `n_p` members drawn uniformly without replacement.
    pub fn uniform_random<R: Rng + ?Sized>(
        space: &ConfigurationSpace,
        n_p: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n_p == 0 || n_p > space.len() {
            return Err(invalid(format!(
                "target set size {n_p} must lie in 1..={}",
                space.len()
            )));
        }
        let ordinals = rand::seq::index::sample(rng, space.len(), n_p).into_vec();
        Self::from_ordinals(space, &ordinals)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, ordinal: usize) -> bool {
        self.members.binary_search(&ordinal).is_ok()
    }

    /// `N_P`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Empty or equal to the whole space; the energy is then flat.
    pub fn is_degenerate(&self) -> bool {
        self.members.is_empty() || self.members.len() == self.space_len
    }

    /// Storage load `alpha = N_P / M^{n_ph}`.
    pub fn alpha(&self, space: &ConfigurationSpace) -> f64 {
        self.members.len() as f64 / space.capacity_scale()
    }
}

/// `N_P = round_half_up(alpha * M^{n_ph})`.
pub fn patterns_for_alpha(alpha: f64, m: usize, n_photons: usize) -> usize {
    let raw = alpha * (m as f64).powi(n_photons as i32);
    // absorb representation error such as 0.07 * 100 = 7.000000000000001
    (raw + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Ising layer `sigma in {-1,+1}^M`; `+1` is phase 0 and `-1` is phase pi.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(invalid("spin configuration must have at least one spin"));
        }
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(invalid(format!("spin value {bad} is not +1 or -1")));
        }
        Ok(Self { spins })
    }

    pub fn all_up(m: usize) -> Self {
        Self { spins: vec![1; m] }
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        Self {
            spins: (0..m).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    /// Bit `i` of `code` set means spin `i` (0-based) is down. Spins past
    /// the 64th are up.
    pub fn from_code(code: u64, m: usize) -> Self {
        Self {
            spins: (0..m)
                .map(|i| if i < 64 && (code >> i) & 1 == 1 { -1 } else { 1 })
                .collect(),
        }
    }

    /// Inverse of [`SpinConfiguration::from_code`] over the first 64 spins.
    pub fn code(&self) -> u64 {
        self.spins
            .iter()
            .take(64)
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0u64, |acc, (i, _)| acc | (1 << i))
    }

    /// Maps phases `{0, pi}` to spins; anything else is rejected.
    pub fn from_phases(phases: &[f64]) -> Result<Self> {
        let spins = phases
            .iter()
            .map(|&p| {
                if p.abs() < 1e-9 {
                    Ok(1)
                } else if (p - std::f64::consts::PI).abs() < 1e-9 {
                    Ok(-1)
                } else {
                    Err(invalid(format!("phase {p} is neither 0 nor pi")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(spins)
    }

    pub fn phases(&self) -> Vec<f64> {
        self.spins
            .iter()
            .map(|&s| if s > 0 { 0.0 } else { std::f64::consts::PI })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.spins
    }

    /// Copy with the 1-based spin `i` negated.
    pub fn flipped(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.spins.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                bound: self.spins.len(),
            });
        }
        let mut out = self.clone();
        out.spins[i - 1] = -out.spins[i - 1];
        Ok(out)
    }

    pub(crate) fn flip_in_place(&mut self, i0: usize) {
        self.spins[i0] = -self.spins[i0];
    }

    pub fn negated(&self) -> Self {
        Self {
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }

    /// `prod_i sigma_{x_i}` over the photons of `x`.
    pub fn product_over(&self, x: &PhotonConfiguration) -> f64 {
        spin_product(&self.spins, x)
    }
}

pub(crate) fn spin_product(spins: &[i8], x: &PhotonConfiguration) -> f64 {
    let neg = x.modes().iter().filter(|&&m| spins[m] < 0).count();
    if neg % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Returns a copy of `sigma` with the 1-based spin `i` flipped.
pub fn spin_flip(sigma: &SpinConfiguration, i: usize) -> Result<SpinConfiguration> {
    sigma.flipped(i)
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.spins {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Parses `"+-+-"` or a separated list such as `"1,-1,1"`.
impl FromStr for SpinConfiguration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |tok: &str| Error::Parse {
            line: 1,
            message: format!("bad spin {tok:?}"),
        };
        let spins = if s.contains(|c: char| c == ',' || c.is_whitespace()) {
            s.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| match t {
                    "1" | "+1" | "+" => Ok(1),
                    "-1" | "-" => Ok(-1),
                    other => Err(bad(other)),
                })
                .collect::<Result<Vec<i8>>>()?
        } else {
            s.chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    other => Err(bad(&other.to_string())),
                })
                .collect::<Result<Vec<i8>>>()?
        };
        Self::new(spins)
    }
}
