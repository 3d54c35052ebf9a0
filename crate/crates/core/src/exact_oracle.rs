// SPDX-License-Identifier: Apache-2.0

//! Digital ground truth: PARTITION solvers and the analytic spectrum of the
//! cosine product.
//!
//! Amplitudes use the time-average convention: a sign vector `ε ∈ {±1}^n`
//! contributes `1/2^n` to the line at `Σ ε_i a_i`, so the DC line equals the
//! mean of `∏ cos(a_i t)` over one period. Multiply by [`FOURIER_PREFACTOR`]
//! times `2` to get the unitary continuous-transform weights.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instances::CpiInstance;

/// Unitary-transform weight `sqrt(pi/2)` of a single cosine line.
pub const FOURIER_PREFACTOR: f64 = 1.253_314_137_315_500_3;

/// Default DP budget in table cells.
pub const DEFAULT_DP_BUDGET: u64 = 100_000_000;

pub const BRUTEFORCE_LIMIT: usize = 30;
pub const SPECTRUM_LIMIT: usize = 20;

// Dense witness tables store one u32 per reachable sum; past this many cells
// the sparse route is cheaper.
const DENSE_WITNESS_CELLS: u64 = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyUnits {
    /// Dimensionless instance units (`cos(a t)` has frequency `a`).
    Instance,
    Hertz,
}

impl FrequencyUnits {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Instance => "instance",
            Self::Hertz => "Hz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub frequency: f64,
    pub amplitude: f64,
}

/// Frequency-to-amplitude map, sorted by frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub lines: Vec<SpectralLine>,
    /// Bin width for measured spectra, 0 for analytic ones.
    pub resolution: f64,
    pub units: FrequencyUnits,
}

impl Spectrum {
    /// Amplitude of the line closest to `frequency`, if one lies within `tol`.
    pub fn amplitude_at(&self, frequency: f64, tol: f64) -> Option<f64> {
        self.lines
            .iter()
            .filter(|l| (l.frequency - frequency).abs() <= tol)
            .min_by(|a, b| {
                (a.frequency - frequency)
                    .abs()
                    .total_cmp(&(b.frequency - frequency).abs())
            })
            .map(|l| l.amplitude)
    }

    pub fn dc(&self) -> f64 {
        self.amplitude_at(0.0, self.resolution * 0.5).unwrap_or(0.0)
    }

    pub fn total_power(&self) -> f64 {
        self.lines.iter().map(|l| l.amplitude * l.amplitude).sum()
    }

    pub fn peak_amplitude(&self) -> f64 {
        self.lines.iter().map(|l| l.amplitude.abs()).fold(0.0, f64::max)
    }

    /// Same lines, frequencies multiplied by `factor` (e.g. `f_base` to go
    /// from instance units to Hz).
    pub fn rescaled(&self, factor: f64, units: FrequencyUnits) -> Spectrum {
        Spectrum {
            lines: self
                .lines
                .iter()
                .map(|l| SpectralLine { frequency: l.frequency * factor, amplitude: l.amplitude })
                .collect(),
            resolution: self.resolution * factor,
            units,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# units={}\nfrequency,amplitude\n", self.units.as_str());
        for l in &self.lines {
            let _ = writeln!(s, "{},{}", l.frequency, l.amplitude);
        }
        s
    }
}

/// The subset `M0` of a balanced split, as zero-based indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionWitness {
    pub subset: Vec<usize>,
}

impl PartitionWitness {
    pub fn is_valid_for(&self, inst: &CpiInstance) -> bool {
        let inside: u128 = self.subset.iter().map(|&i| inst.values()[i] as u128).sum();
        2 * inside == inst.sum() as u128
    }
}

fn guard(inst: &CpiInstance, limit: usize) -> Result<()> {
    if inst.len() > limit {
        return Err(Error::InstanceTooLarge { n: inst.len(), limit });
    }
    Ok(())
}

/// Tries every sign vector with the first sign fixed (the other half are
/// mirror images).
pub fn decide_bruteforce(inst: &CpiInstance) -> Result<bool> {
    guard(inst, BRUTEFORCE_LIMIT)?;
    let vals = inst.values();
    let n = vals.len();
    // Gray-code walk over the signs of items 1..n.
    let mut sum: i128 = vals.iter().map(|&v| v as i128).sum();
    if sum == 0 {
        return Ok(true);
    }
    let mut signs = vec![1i8; n];
    for k in 1u64..(1u64 << (n - 1)) {
        let bit = k.trailing_zeros() as usize + 1;
        let v = vals[bit] as i128;
        sum -= 2 * signs[bit] as i128 * v;
        signs[bit] = -signs[bit];
        if sum == 0 {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn decide_dp(inst: &CpiInstance) -> Result<bool> {
    decide_dp_with_budget(inst, DEFAULT_DP_BUDGET)
}

/// Subset-sum reachability up to half the total. Uses a dense bitset when the
/// half-sum fits `budget`, otherwise a sparse table with two-sided pruning
/// whose total state count must fit `budget`.
pub fn decide_dp_with_budget(inst: &CpiInstance, budget: u64) -> Result<bool> {
    if inst.sum() % 2 == 1 {
        return Ok(false);
    }
    let half = inst.sum() / 2;
    if half < budget {
        Ok(dense_reachable(inst.values(), half))
    } else {
        Ok(sparse_layers(inst.values(), half, budget)?.found)
    }
}

pub fn find_partition(inst: &CpiInstance) -> Result<Option<PartitionWitness>> {
    find_partition_with_budget(inst, DEFAULT_DP_BUDGET)
}

pub fn find_partition_with_budget(inst: &CpiInstance, budget: u64) -> Result<Option<PartitionWitness>> {
    if inst.sum() % 2 == 1 {
        return Ok(None);
    }
    let half = inst.sum() / 2;
    let mut subset = if half < budget.min(DENSE_WITNESS_CELLS) {
        match dense_witness(inst.values(), half) {
            Some(s) => s,
            None => return Ok(None),
        }
    } else {
        let table = sparse_layers(inst.values(), half, budget)?;
        if !table.found {
            return Ok(None);
        }
        table.backtrack(inst.values(), half)
    };
    subset.sort_unstable();
    Ok(Some(PartitionWitness { subset }))
}

fn dense_reachable(vals: &[u64], half: u64) -> bool {
    let cells = half as usize + 1;
    let mut bits = vec![0u64; cells.div_ceil(64)];
    bits[0] = 1;
    for &v in vals {
        if v > half {
            continue;
        }
        shift_or(&mut bits, v as usize);
        if let Some(last) = bits.last_mut() {
            let tail = cells % 64;
            if tail != 0 {
                *last &= (1u64 << tail) - 1;
            }
        }
        if bits[half as usize / 64] >> (half % 64) & 1 == 1 {
            return true;
        }
    }
    half == 0
}

// bits |= bits << shift, in place, high words first.
fn shift_or(bits: &mut [u64], shift: usize) {
    let words = shift / 64;
    let rem = shift % 64;
    for i in (0..bits.len()).rev() {
        if i < words {
            break;
        }
        let src = i - words;
        let mut v = bits[src] << rem;
        if rem != 0 && src > 0 {
            v |= bits[src - 1] >> (64 - rem);
        }
        bits[i] |= v;
    }
}

fn dense_witness(vals: &[u64], half: u64) -> Option<Vec<usize>> {
    const UNSET: u32 = u32::MAX;
    let cells = half as usize + 1;
    let mut first = vec![UNSET; cells];
    let mut reached = vec![false; cells];
    reached[0] = true;
    for (i, &v) in vals.iter().enumerate() {
        let v = v as usize;
        if v > half as usize {
            continue;
        }
        for s in (v..cells).rev() {
            if !reached[s] && reached[s - v] {
                reached[s] = true;
                first[s] = i as u32;
            }
        }
        if reached[half as usize] {
            break;
        }
    }
    if !reached[half as usize] {
        return None;
    }
    let mut s = half as usize;
    let mut subset = Vec::new();
    while s > 0 {
        let i = first[s] as usize;
        subset.push(i);
        s -= vals[i] as usize;
    }
    Some(subset)
}

struct SparseTable {
    // Items in processing order (descending value) as original indices.
    order: Vec<usize>,
    // layers[k] = reachable pruned sums after the first k items of `order`.
    layers: Vec<Vec<u64>>,
    found: bool,
}

impl SparseTable {
    fn backtrack(&self, vals: &[u64], target: u64) -> Vec<usize> {
        let mut s = target;
        let mut subset = Vec::new();
        for k in (0..self.order.len()).rev() {
            if self.layers[k].binary_search(&s).is_err() {
                let idx = self.order[k];
                subset.push(idx);
                s -= vals[idx];
            }
        }
        debug_assert_eq!(s, 0);
        subset
    }
}

fn sparse_layers(vals: &[u64], target: u64, budget: u64) -> Result<SparseTable> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].cmp(&vals[a]).then(a.cmp(&b)));
    let mut suffix = vec![0u128; order.len() + 1];
    for k in (0..order.len()).rev() {
        suffix[k] = suffix[k + 1] + vals[order[k]] as u128;
    }
    let mut layers: Vec<Vec<u64>> = vec![vec![0]];
    let mut total_states: u64 = 1;
    for (k, &idx) in order.iter().enumerate() {
        let v = vals[idx];
        let prev = &layers[k];
        let rest = suffix[k + 1];
        let keep = |s: u64| s <= target && s as u128 + rest >= target as u128;
        let mut next: Vec<u64> = prev
            .iter()
            .copied()
            .filter(|&s| keep(s))
            .chain(prev.iter().filter_map(|&s| s.checked_add(v)).filter(|&s| keep(s)))
            .collect();
        next.sort_unstable();
        next.dedup();
        total_states += next.len() as u64;
        if total_states > budget {
            return Err(Error::BudgetExceeded { budget, needed: total_states });
        }
        layers.push(next);
    }
    let found = layers.last().is_some_and(|l| l.binary_search(&target).is_ok());
    Ok(SparseTable { order, layers, found })
}

/// Number of sign vectors `ε` with `Σ ε_i a_i = 0`, by meet-in-the-middle.
pub fn balanced_sign_count(inst: &CpiInstance) -> Result<u64> {
    guard(inst, BRUTEFORCE_LIMIT)?;
    let (left, right) = inst.values().split_at(inst.len() / 2);
    let mut counts: HashMap<i128, u64> = HashMap::new();
    for s in signed_sums(left) {
        *counts.entry(s).or_default() += 1;
    }
    Ok(signed_sums(right)
        .into_iter()
        .map(|s| counts.get(&-s).copied().unwrap_or(0))
        .sum())
}

fn signed_sums(vals: &[u64]) -> Vec<i128> {
    let mut sums = vec![0i128];
    for &v in vals {
        let v = v as i128;
        sums = sums.iter().flat_map(|&s| [s + v, s - v]).collect();
    }
    sums
}

/// Mean of `∏ cos(a_i t)` over one period: the balanced fraction of sign
/// vectors. Zero exactly on NO-instances.
pub fn ideal_dc(inst: &CpiInstance) -> Result<f64> {
    let count = balanced_sign_count(inst)?;
    Ok(count as f64 / (1u64 << inst.len()) as f64)
}

/// Multiplicity of every line `Σ ε_i a_i` over all `2^n` sign vectors.
pub fn line_multiplicities(inst: &CpiInstance) -> Result<BTreeMap<i128, u64>> {
    guard(inst, SPECTRUM_LIMIT)?;
    let mut lines: BTreeMap<i128, u64> = BTreeMap::from([(0, 1)]);
    for &v in inst.values() {
        let v = v as i128;
        let mut next = BTreeMap::new();
        for (&f, &c) in &lines {
            *next.entry(f + v).or_default() += c;
            *next.entry(f - v).or_default() += c;
        }
        lines = next;
    }
    Ok(lines)
}

/// Analytic spectrum in instance units.
pub fn analytic_spectrum(inst: &CpiInstance) -> Result<Spectrum> {
    let norm = (1u64 << inst.len()) as f64;
    let lines = line_multiplicities(inst)?
        .into_iter()
        .map(|(f, c)| SpectralLine { frequency: f as f64, amplitude: c as f64 / norm })
        .collect();
    Ok(Spectrum { lines, resolution: 0.0, units: FrequencyUnits::Instance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::parse_instance;

    fn inst(s: &str) -> CpiInstance {
        parse_instance(s).unwrap()
    }

    #[test]
    fn bruteforce_examples() {
        assert!(decide_bruteforce(&inst("3 2 5")).unwrap());
        assert!(!decide_bruteforce(&inst("3 6 4")).unwrap());
        assert!(!decide_bruteforce(&inst("1")).unwrap());
        let big = CpiInstance::new(vec![1; 31]).unwrap();
        assert_eq!(decide_bruteforce(&big), Err(Error::InstanceTooLarge { n: 31, limit: 30 }));
    }

    #[test]
    fn dp_examples() {
        assert!(decide_dp(&inst("3 2 5")).unwrap());
        assert!(!decide_dp(&inst("10 90 10 40")).unwrap());
        assert!(decide_dp(&inst("30 90 20 40")).unwrap());
        assert!(!decide_dp(&inst("1")).unwrap());
    }

    #[test]
    fn sparse_route_matches_dense() {
        for s in ["3 2 5", "3 6 4", "30 90 20 40", "10 90 10 40", "1 1", "7 7 7 7 14"] {
            let i = inst(s);
            let dense = decide_dp(&i).unwrap();
            let half = i.sum() / 2;
            let table = sparse_layers(i.values(), half, 1 << 20).unwrap();
            let sparse = i.sum().is_multiple_of(2) && table.found;
            assert_eq!(dense, sparse, "{s}");
            if sparse {
                let w = PartitionWitness { subset: table.backtrack(i.values(), half) };
                assert!(w.is_valid_for(&i));
            }
        }
    }

    #[test]
    fn huge_magnitudes_use_sparse_table() {
        let base = 1u64 << 40;
        let i = CpiInstance::new(vec![base + 3, base + 5, 2 * base + 8]).unwrap();
        assert!(decide_dp(&i).unwrap());
        assert!(find_partition(&i).unwrap().unwrap().is_valid_for(&i));
        let j = CpiInstance::new(vec![base + 3, base + 5, 2 * base + 10]).unwrap();
        assert!(!decide_dp(&j).unwrap());
    }

    #[test]
    fn budget_is_enforced() {
        let i = CpiInstance::new((1..=16).map(|k| (1u64 << 30) + k * 977).collect()).unwrap();
        assert!(matches!(decide_dp_with_budget(&i, 100), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn witness_examples() {
        assert_eq!(find_partition(&inst("3 2 5")).unwrap().unwrap().subset, vec![0, 1]);
        assert_eq!(find_partition(&inst("1 1")).unwrap().unwrap().subset, vec![0]);
        assert_eq!(find_partition(&inst("3 6 4")).unwrap(), None);
    }

    #[test]
    fn ideal_dc_examples() {
        assert_eq!(ideal_dc(&inst("3 2 5")).unwrap(), 0.25);
        assert_eq!(ideal_dc(&inst("2 3")).unwrap(), 0.0);
        assert_eq!(ideal_dc(&inst("1 1")).unwrap(), 0.5);
    }

    #[test]
    fn spectrum_examples() {
        let s = analytic_spectrum(&inst("2 3")).unwrap();
        let freqs: Vec<f64> = s.lines.iter().map(|l| l.frequency).collect();
        assert_eq!(freqs, vec![-5.0, -1.0, 1.0, 5.0]);
        assert!(s.lines.iter().all(|l| l.amplitude == 0.25));

        let s = analytic_spectrum(&inst("2 3 5")).unwrap();
        let freqs: Vec<f64> = s.lines.iter().map(|l| l.frequency).collect();
        assert_eq!(freqs, vec![-10.0, -6.0, -4.0, 0.0, 4.0, 6.0, 10.0]);
        assert_eq!(s.dc(), 0.25);

        let s = analytic_spectrum(&inst("1")).unwrap();
        assert_eq!(s.lines, vec![
            SpectralLine { frequency: -1.0, amplitude: 0.5 },
            SpectralLine { frequency: 1.0, amplitude: 0.5 },
        ]);
    }

    #[test]
    fn spectrum_csv_has_units_header() {
        let csv = analytic_spectrum(&inst("1")).unwrap().to_csv();
        assert_eq!(csv, "# units=instance\nfrequency,amplitude\n-1,0.5\n1,0.5\n");
    }

    #[test]
    fn prefactor_is_sqrt_half_pi() {
        assert!((FOURIER_PREFACTOR - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-15);
    }
}
