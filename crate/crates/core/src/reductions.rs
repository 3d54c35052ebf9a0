// SPDX-License-Identifier: Apache-2.0

//! CNF formulas, the 3-SAT to SUBSET-SUM digit construction padded into a
//! PARTITION instance, and witness extraction by repeated decision queries.

use std::fmt;

use crate::analog_pipeline::{BandwidthModel, NonidealityConfig, TimeGrid};
use crate::calibration::{decide_analog, nominal_yes_floor, DecisionThreshold};
use crate::dsp::{FilterSpec, SamplingPlan};
use crate::error::{Error, Result};
use crate::exact_oracle::{decide_bruteforce, decide_dp, find_partition, PartitionWitness};
use crate::instances::CpiInstance;

/// Base of the digit construction. A clause column sums to at most
/// 3 literals + 1 + 2 slack = 6, so no carries occur.
pub const DIGIT_BASE: u64 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CnfFormula {
    pub num_vars: usize,
    /// Non-zero DIMACS literals. An empty clause makes the formula false.
    pub clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self> {
        for clause in &clauses {
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() as usize > num_vars {
                    return Err(Error::InvalidParameter(format!(
                        "literal {lit} out of range for {num_vars} variables"
                    )));
                }
            }
        }
        Ok(Self { num_vars, clauses })
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Vec::is_empty)
    }

    pub fn mentions(&self, var: usize) -> bool {
        self.clauses.iter().flatten().any(|l| l.unsigned_abs() as usize == var)
    }

    /// True when `values` (one per variable) satisfies every clause.
    pub fn evaluate(&self, values: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|&l| {
                let v = values.get(l.unsigned_abs() as usize - 1).copied().unwrap_or(false);
                if l > 0 {
                    v
                } else {
                    !v
                }
            })
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&l.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Parses DIMACS CNF; count mismatches with the header are tolerated.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    parse_dimacs_with(text, false).map(|(f, _)| f)
}

/// Parses DIMACS CNF. A clause count that disagrees with the header is an
/// error when `strict`, otherwise it is reported in the returned warnings.
pub fn parse_dimacs_with(text: &str, strict: bool) -> Result<(CnfFormula, Vec<String>)> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut warnings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::Parse { line: line_no, msg: "duplicate problem line".into() });
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse { line: line_no, msg: format!("malformed header `{line}`") };
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(bad());
            }
            header = Some((parts[2].parse().map_err(|_| bad())?, parts[3].parse().map_err(|_| bad())?));
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(Error::Parse { line: line_no, msg: "clause before `p cnf` header".into() });
        };
        for tok in line.split_whitespace() {
            let lit: i32 =
                tok.parse().map_err(|_| Error::Parse { line: line_no, msg: format!("bad literal `{tok}`") })?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else if lit.unsigned_abs() as usize > num_vars {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("literal {lit} exceeds declared {num_vars} variables"),
                });
            } else {
                current.push(lit);
            }
        }
    }
    let Some((num_vars, declared)) = header else {
        return Err(Error::Parse { line: 0, msg: "missing `p cnf` header".into() });
    };
    if !current.is_empty() {
        warnings.push("last clause is not terminated by 0".to_string());
        clauses.push(current);
    }
    if clauses.len() != declared {
        let msg = format!("header declares {declared} clauses, found {}", clauses.len());
        if strict {
            return Err(Error::Parse { line: 0, msg });
        }
        warnings.push(msg);
    }
    Ok((CnfFormula { num_vars, clauses }, warnings))
}

/// Substitutes `var = val`: satisfied clauses disappear, falsified literals
/// are removed and an emptied clause stays as the contradiction marker.
pub fn simplify(f: &CnfFormula, var: usize, val: bool) -> CnfFormula {
    let sat_lit = if val { var as i32 } else { -(var as i32) };
    let clauses = f
        .clauses
        .iter()
        .filter(|c| !c.contains(&sat_lit))
        .map(|c| c.iter().copied().filter(|&l| l != -sat_lit).collect())
        .collect();
    CnfFormula { num_vars: f.num_vars, clauses }
}

/// Equisatisfiable formula with at most three literals per clause. Repeated
/// literals are merged, tautologies dropped, and long clauses chained through
/// fresh variables numbered after the original ones.
pub fn to_three_cnf(f: &CnfFormula) -> CnfFormula {
    let mut num_vars = f.num_vars;
    let mut clauses = Vec::new();
    for clause in &f.clauses {
        let mut lits: Vec<i32> = Vec::with_capacity(clause.len());
        for &l in clause {
            if !lits.contains(&l) {
                lits.push(l);
            }
        }
        if lits.iter().any(|l| lits.contains(&-l)) {
            continue;
        }
        if lits.len() <= 3 {
            clauses.push(lits);
            continue;
        }
        num_vars += 1;
        let mut link = num_vars as i32;
        clauses.push(vec![lits[0], lits[1], link]);
        for &l in &lits[2..lits.len() - 2] {
            num_vars += 1;
            clauses.push(vec![-link, l, num_vars as i32]);
            link = num_vars as i32;
        }
        clauses.push(vec![-link, lits[lits.len() - 2], lits[lits.len() - 1]]);
    }
    CnfFormula { num_vars, clauses }
}

/// What an entry of the reduced instance stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryRole {
    Literal { var: usize, positive: bool },
    Slack { clause: usize, weight: u8 },
    /// `2S - t`; the side holding it picks the SUBSET-SUM solution.
    PadLow,
    /// `S + t`.
    PadHigh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionMap {
    pub original_vars: usize,
    pub reduced: CnfFormula,
    pub base: u64,
    /// SUBSET-SUM target before padding.
    pub target: u64,
    pub roles: Vec<EntryRole>,
}

impl ReductionMap {
    /// Reads a truth assignment of the original variables off a balanced
    /// split of the reduced instance.
    pub fn assignment_from_witness(&self, witness: &PartitionWitness) -> Option<Assignment> {
        let pad_low = self.roles.iter().position(|r| *r == EntryRole::PadLow)?;
        let in_subset = {
            let mut mask = vec![false; self.roles.len()];
            for &i in &witness.subset {
                *mask.get_mut(i)? = true;
            }
            mask
        };
        let side = in_subset[pad_low];
        let mut values = vec![false; self.reduced.num_vars];
        for (i, role) in self.roles.iter().enumerate() {
            if let EntryRole::Literal { var, positive } = *role {
                if in_subset[i] == side {
                    values[var - 1] = positive;
                }
            }
        }
        values.truncate(self.original_vars);
        Some(Assignment { values })
    }
}

/// Reduces `f` to a PARTITION instance that is a YES-instance exactly when
/// `f` is satisfiable.
pub fn sat_to_partition(f: &CnfFormula) -> Result<(CpiInstance, ReductionMap)> {
    let reduced = to_three_cnf(f);
    let m = reduced.clauses.len();
    let digits = m + reduced.num_vars;
    let bits_needed = || (digits as f64 * (DIGIT_BASE as f64).log2()).ceil() as u32 + 3;
    let overflow = || Error::MagnitudeOverflow { bits: bits_needed() };
    if bits_needed() > 127 {
        return Err(overflow());
    }
    let pow = |d: usize| (DIGIT_BASE as u128).pow(d as u32);
    let clause_digit = |j: usize| pow(j);
    let var_digit = |v: usize| pow(m + v - 1);

    let mut numbers: Vec<u128> = Vec::new();
    let mut roles = Vec::new();
    for var in 1..=reduced.num_vars {
        for positive in [true, false] {
            let lit = if positive { var as i32 } else { -(var as i32) };
            let mut x = var_digit(var);
            for (j, c) in reduced.clauses.iter().enumerate() {
                if c.contains(&lit) {
                    x += clause_digit(j);
                }
            }
            numbers.push(x);
            roles.push(EntryRole::Literal { var, positive });
        }
    }
    for j in 0..m {
        for weight in [1u8, 2] {
            numbers.push(weight as u128 * clause_digit(j));
            roles.push(EntryRole::Slack { clause: j, weight });
        }
    }
    let target: u128 = (1..=reduced.num_vars).map(var_digit).sum::<u128>() + (0..m).map(|j| 4 * clause_digit(j)).sum::<u128>();
    let total: u128 = numbers.iter().sum();
    let map = |values: Vec<u64>, roles: Vec<EntryRole>, target: u64| -> Result<(CpiInstance, ReductionMap)> {
        let inst = CpiInstance::new(values)?;
        Ok((inst, ReductionMap { original_vars: f.num_vars, reduced: reduced.clone(), base: DIGIT_BASE, target, roles }))
    };
    if total == 0 {
        return map(vec![1, 1], vec![EntryRole::PadLow, EntryRole::PadHigh], 0);
    }
    if 4 * total > u64::MAX as u128 {
        return Err(overflow());
    }
    numbers.push(2 * total - target);
    roles.push(EntryRole::PadLow);
    numbers.push(total + target);
    roles.push(EntryRole::PadHigh);
    map(numbers.into_iter().map(|x| x as u64).collect(), roles, target as u64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub values: Vec<bool>,
}

impl Assignment {
    /// DIMACS value line, `v 1 -2 0`.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::from("v");
        for (i, &v) in self.values.iter().enumerate() {
            let lit = i as i64 + 1;
            out.push_str(&format!(" {}", if v { lit } else { -lit }));
        }
        out.push_str(" 0");
        out
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dimacs())
    }
}

/// Anything that answers PARTITION decisions.
pub trait PartitionOracle {
    fn decide(&mut self, inst: &CpiInstance) -> Result<bool>;
}

/// Simulated analogue oracle. Instances are squeezed in frequency (`f_base`
/// lowered) until the largest line fits the multiplier bandwidth, the output
/// is brick-walled just above DC and compared against half the smallest YES
/// level.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogBackend {
    pub cfg: NonidealityConfig,
    /// Fraction of `f*` the squeezed top line may reach.
    pub squeeze_margin: f64,
    /// Refuse instances whose simulation grid would exceed this many points.
    pub max_grid_points: usize,
}

impl AnalogBackend {
    pub const DEFAULT_MAX_GRID_POINTS: usize = 1 << 22;

    pub fn new(cfg: NonidealityConfig) -> Self {
        Self { cfg, squeeze_margin: 0.5, max_grid_points: Self::DEFAULT_MAX_GRID_POINTS }
    }

    /// Config with `f_base` lowered so that `Σ a_i · f_base <= margin · f*`.
    pub fn squeezed_config(&self, inst: &CpiInstance) -> NonidealityConfig {
        let mut cfg = self.cfg.clone();
        let f_star = cfg.bandwidth_f_star;
        if cfg.bandwidth_model != BandwidthModel::None && f_star.is_finite() {
            let limit = self.squeeze_margin * f_star;
            let top = inst.sum() as f64 * cfg.f_base;
            if top > limit {
                cfg.f_base *= limit / top;
            }
        }
        cfg
    }

    pub fn plan_for(inst: &CpiInstance, cfg: &NonidealityConfig) -> SamplingPlan {
        let period = 1.0 / (inst.gcd() as f64 * cfg.f_base);
        SamplingPlan { tau: period / 8.0, start_periods: 1, duration_periods: 1 }
    }
}

impl PartitionOracle for AnalogBackend {
    fn decide(&mut self, inst: &CpiInstance) -> Result<bool> {
        let cfg = self.squeezed_config(inst);
        let plan = Self::plan_for(inst, &cfg);
        let grid = TimeGrid::for_plan(inst, &cfg, &plan)?;
        if grid.len > self.max_grid_points {
            return Err(Error::BudgetExceeded { budget: self.max_grid_points as u64, needed: grid.len as u64 });
        }
        let spec = FilterSpec::brickwall(0.5 * inst.gcd() as f64 * cfg.f_base);
        let thr = DecisionThreshold::nominal(nominal_yes_floor(inst, &cfg, &spec));
        Ok(decide_analog(inst, &cfg, &spec.into(), &plan, &thr, true)?.is_yes())
    }
}

// Few of these exist at a time; boxing the analogue variant buys nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum OracleBackend {
    ExactDp,
    ExactBruteForce,
    AnalogSimulated(AnalogBackend),
}

impl PartitionOracle for OracleBackend {
    fn decide(&mut self, inst: &CpiInstance) -> Result<bool> {
        match self {
            OracleBackend::ExactDp => decide_dp(inst),
            OracleBackend::ExactBruteForce => decide_bruteforce(inst),
            OracleBackend::AnalogSimulated(b) => b.decide(inst),
        }
    }
}

/// Wraps an oracle and counts the queries it answers.
pub struct CountingOracle<'a> {
    inner: &'a mut dyn PartitionOracle,
    pub calls: usize,
}

impl<'a> CountingOracle<'a> {
    pub fn new(inner: &'a mut dyn PartitionOracle) -> Self {
        Self { inner, calls: 0 }
    }
}

impl PartitionOracle for CountingOracle<'_> {
    fn decide(&mut self, inst: &CpiInstance) -> Result<bool> {
        self.calls += 1;
        self.inner.decide(inst)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    /// `None` for an unsatisfiable formula.
    pub model: Option<Assignment>,
    pub oracle_calls: usize,
}

impl Extraction {
    /// `s SATISFIABLE` plus the value line, or `s UNSATISFIABLE`.
    pub fn to_dimacs(&self) -> String {
        match &self.model {
            Some(a) => format!("s SATISFIABLE\n{}\n", a.to_dimacs()),
            None => "s UNSATISFIABLE\n".to_string(),
        }
    }
}

/// Fixes the variables one at a time: set `x_i = 1` if the reduced formula
/// stays satisfiable, else `x_i = 0`. Variables that no longer occur are set
/// to 0 without a query, so at most `1 + num_vars` decisions are made.
pub fn extract_witness(f: &CnfFormula, oracle: &mut dyn PartitionOracle) -> Result<Extraction> {
    let mut counter = CountingOracle::new(oracle);
    let mut values: Vec<bool> = Vec::with_capacity(f.num_vars);
    let ask = |g: &CnfFormula, prefix: &[bool], counter: &mut CountingOracle| -> Result<bool> {
        let (inst, _) = sat_to_partition(g)?;
        counter
            .decide(&inst)
            .map_err(|e| Error::Oracle { prefix: prefix.to_vec(), source: Box::new(e) })
    };
    if !ask(f, &values, &mut counter)? {
        return Ok(Extraction { model: None, oracle_calls: counter.calls });
    }
    let mut current = f.clone();
    for var in 1..=f.num_vars {
        if !current.mentions(var) {
            values.push(false);
            continue;
        }
        let high = simplify(&current, var, true);
        if ask(&high, &values, &mut counter)? {
            current = high;
            values.push(true);
        } else {
            current = simplify(&current, var, false);
            values.push(false);
        }
    }
    if !f.evaluate(&values) {
        return Err(Error::InconsistentOracle);
    }
    Ok(Extraction { model: Some(Assignment { values }), oracle_calls: counter.calls })
}

/// Solves `f` directly from a balanced split of its reduction, without the
/// per-variable loop.
pub fn solve_by_witness(f: &CnfFormula) -> Result<Option<Assignment>> {
    let (inst, map) = sat_to_partition(f)?;
    let Some(w) = find_partition(&inst)? else {
        return Ok(None);
    };
    let a = map.assignment_from_witness(&w).ok_or(Error::InconsistentOracle)?;
    if !f.evaluate(&a.values) {
        return Err(Error::InconsistentOracle);
    }
    Ok(Some(a))
}
