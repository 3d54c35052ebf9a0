// SPDX-License-Identifier: Apache-2.0

//! Cosine-product-integration (CPI) instances.
//!
//! An instance is a list of positive integers `a_1..a_n`, read as the angular
//! frequencies of `cos(a_i t)`. The integral of the product over one period is
//! nonzero exactly when the values split into two halves of equal sum, so the
//! same list doubles as a PARTITION instance. Signs are dropped on input since
//! the cosine is even.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact_oracle;

/// A validated CPI/PARTITION instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CpiInstance {
    values: Vec<u64>,
    sum: u64,
}

impl CpiInstance {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInstance);
        }
        if let Some(pos) = values.iter().position(|&v| v == 0) {
            return Err(Error::ZeroEntry(pos));
        }
        let sum = values
            .iter()
            .try_fold(0u64, |acc, &v| acc.checked_add(v))
            .ok_or(Error::SumOverflow)?;
        Ok(Self { values, sum })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `f_max = a_1 + ... + a_n`, the highest line in the spectrum.
    pub fn sum(&self) -> u64 {
        self.sum
    }

    pub fn gcd(&self) -> u64 {
        self.values.iter().fold(0u64, |g, &v| g.gcd(&v))
    }

    pub fn min_value(&self) -> u64 {
        *self.values.iter().min().expect("instance is never empty")
    }

    /// First instant after 0 at which every `cos(2π a_i t)` is back in phase:
    /// `lcm(1/a_1, ..., 1/a_n) = 1/gcd(a_1, ..., a_n)`.
    pub fn alignment_time(&self) -> Ratio<u64> {
        Ratio::new(1, self.gcd())
    }

    /// Sampling-theorem rate `2 Σ a_i`.
    pub fn nyquist_frequency(&self) -> u128 {
        2 * self.sum as u128
    }
}

impl fmt::Display for CpiInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for CpiInstance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_instance(s)
    }
}

/// Parses whitespace- or comma-separated integers. Negative values are folded
/// to their magnitude.
pub fn parse_instance(text: &str) -> Result<CpiInstance> {
    let values = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<i128>()
                .map_err(|_| Error::InvalidToken(tok.to_string()))
                .and_then(|v| u64::try_from(v.unsigned_abs()).map_err(|_| Error::SumOverflow))
        })
        .collect::<Result<Vec<_>>>()?;
    CpiInstance::new(values)
}

/// Reads an instance file: one instance per line, `#` starts a comment line,
/// blank lines are skipped.
pub fn parse_instance_file(text: &str) -> Result<Vec<CpiInstance>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_instance(line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_instance_file(instances: &[CpiInstance]) -> String {
    let mut s = String::new();
    for inst in instances {
        s.push_str(&inst.to_string());
        s.push('\n');
    }
    s
}

/// An instance squeezed by a factor `lambda` so that it fits a bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledInstance {
    pub base: CpiInstance,
    pub lambda: f64,
    pub scaled_values: Vec<f64>,
    /// Lower bound on the distance between distinct spectral lines after
    /// scaling (`lambda` times the base gcd, at least `lambda`).
    pub min_gap: f64,
}

impl ScaledInstance {
    pub fn scaled_sum(&self) -> f64 {
        self.scaled_values.iter().sum()
    }
}

/// Scales `inst` by `lambda = margin * f_star / Σ a_i`, so the scaled sum lands
/// strictly below `f_star`.
pub fn scale_instance(inst: &CpiInstance, f_star: f64, margin: f64) -> Result<ScaledInstance> {
    if !(f_star > 0.0 && f_star.is_finite()) {
        return Err(Error::InvalidParameter(format!("f_star must be positive, got {f_star}")));
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidParameter(format!("margin must lie in (0,1), got {margin}")));
    }
    let lambda = margin * f_star / inst.sum() as f64;
    Ok(ScaledInstance {
        base: inst.clone(),
        lambda,
        scaled_values: inst.values().iter().map(|&v| lambda * v as f64).collect(),
        min_gap: lambda * inst.gcd() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Yes,
    No,
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "yes" => Ok(Self::Yes),
            "no" => Ok(Self::No),
            other => Err(Error::InvalidParameter(format!("unknown instance kind `{other}`"))),
        }
    }
}

const GENERATION_ATTEMPTS: usize = 10_000;

/// Draws a labelled instance. Every returned instance is checked against the
/// DP oracle, so its label is always correct.
pub fn random_instance(n: usize, max_mag: u64, kind: InstanceKind, seed: u64) -> Result<CpiInstance> {
    if max_mag == 0 {
        return Err(Error::InvalidParameter("max_mag must be at least 1".into()));
    }
    if n == 0 || (kind == InstanceKind::Yes && n < 2) {
        return Err(Error::InvalidParameter(format!("n = {n} cannot produce a {kind:?} instance")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GENERATION_ATTEMPTS {
        let candidate = match kind {
            InstanceKind::Yes => balanced_candidate(n, max_mag, &mut rng),
            InstanceKind::No => Some((0..n).map(|_| rng.random_range(1..=max_mag)).collect()),
        };
        let Some(values) = candidate else { continue };
        let inst = CpiInstance::new(values)?;
        if exact_oracle::decide_dp(&inst)? == (kind == InstanceKind::Yes) {
            return Ok(inst);
        }
    }
    Err(Error::GenerationFailed(GENERATION_ATTEMPTS))
}

// n-1 free values, then one repair value that balances a random two-sided split.
fn balanced_candidate(n: usize, max_mag: u64, rng: &mut ChaCha8Rng) -> Option<Vec<u64>> {
    let mut values: Vec<u64> = (0..n - 1).map(|_| rng.random_range(1..=max_mag)).collect();
    let (mut left, mut right) = (0u64, 0u64);
    for &v in &values {
        if rng.random_bool(0.5) {
            left += v;
        } else {
            right += v;
        }
    }
    let repair = left.abs_diff(right);
    if repair == 0 || repair > max_mag {
        return None;
    }
    values.push(repair);
    values.shuffle(rng);
    Some(values)
}
