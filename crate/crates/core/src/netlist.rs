// SPDX-License-Identifier: Apache-2.0

//! Behavioural SPICE netlists of the multiplier cascade and a reader for
//! transient traces exported by a circuit simulator.

use std::fmt::Write as _;

use crate::analog_pipeline::{BandwidthModel, NonidealityConfig};
use crate::dsp::{FilterKind, FilterSpec, SampledTrace, SamplingPlan};
use crate::error::{Error, Result};
use crate::instances::CpiInstance;

/// Longest `.tran` step.
pub const MAX_TRAN_STEP: f64 = 2e-6;
/// Resistor used in every RC section.
pub const FILTER_RESISTOR_OHMS: f64 = 1_000.0;
/// Upper bound on the uniform grid built from a variable-step trace.
pub const MAX_RESAMPLED_POINTS: usize = 10_000_000;

/// Nodes belonging to one multiplier stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageNodes {
    pub multiplier: String,
    pub z: String,
    pub amplifier: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetlistDoc {
    pub title: String,
    /// Element, directive and comment lines, without the title and `.end`.
    pub cards: Vec<String>,
    pub node_map: Vec<StageNodes>,
}

/// The `.tran` directive: `.tran 0 stop start max_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranCard {
    pub stop: f64,
    pub start: f64,
    pub max_step: f64,
}

impl TranCard {
    /// Sampling plan recording the same window in alignment periods.
    pub fn sampling_plan(&self, inst: &CpiInstance, f_base: f64, tau: f64) -> SamplingPlan {
        let period = 1.0 / (inst.gcd() as f64 * f_base);
        let start = (self.start / period).round() as u32;
        let stop = (self.stop / period).round() as u32;
        SamplingPlan { tau, start_periods: start, duration_periods: stop.saturating_sub(start).max(1) }
    }
}

impl NetlistDoc {
    /// Inserts comment cards right after the title.
    pub fn with_header_comments<I: IntoIterator<Item = String>>(mut self, lines: I) -> Self {
        let mut cards: Vec<String> = lines.into_iter().map(|l| format!("* {l}")).collect();
        cards.append(&mut self.cards);
        self.cards = cards;
        self
    }

    pub fn tran(&self) -> Option<TranCard> {
        self.cards.iter().find_map(|c| parse_tran(c))
    }
}

impl std::fmt::Display for NetlistDoc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "* {}", self.title)?;
        for card in &self.cards {
            writeln!(f, "{card}")?;
        }
        writeln!(f, ".end")
    }
}

/// Reads a `.tran 0 stop start max_step` card.
pub fn parse_tran(card: &str) -> Option<TranCard> {
    let mut parts = card.split_whitespace();
    if !parts.next()?.eq_ignore_ascii_case(".tran") {
        return None;
    }
    let nums: Vec<f64> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
    match nums[..] {
        [_, stop, start, max_step] => Some(TranCard { stop, start, max_step }),
        _ => None,
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Cascade of `n` cosine sources, `n - 1` behavioural multipliers with Z
/// inputs and gain blocks, then the RC low-pass of `spec` into node `out`.
pub fn emit_netlist(inst: &CpiInstance, cfg: &NonidealityConfig, spec: &FilterSpec) -> Result<NetlistDoc> {
    let n = inst.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("a netlist needs at least 2 sources, got {n}")));
    }
    cfg.validate()?;
    spec.validate()?;
    let mut cards = Vec::new();
    let mut c = |s: String| cards.push(s);
    let top = inst.sum() as f64 * cfg.f_base;
    if cfg.bandwidth_model != BandwidthModel::None && top > cfg.bandwidth_f_star {
        c(format!(
            "* WARNING: top line {} Hz exceeds multiplier bandwidth {} Hz",
            num(top),
            num(cfg.bandwidth_f_star)
        ));
    }
    c("* Multipliers are behavioural; substitute the vendor multiplier subcircuit here.".into());
    c("* Amplifiers are ideal gain blocks; feedback network values are placeholders.".into());
    c(format!("* Supply rails +-{} V are not modelled by the behavioural elements.", num(cfg.supply_voltage)));
    c("* Add `.options cshunt=1e-15` if the simulator fails to converge.".into());

    for (i, &a) in inst.values().iter().enumerate() {
        let amp = cfg.source_amplitude * cfg.source_gain_at(i);
        c(format!("V{} s{} 0 SIN(0 {} {} 0 0 90)", i + 1, i + 1, num(amp), num(a as f64 * cfg.f_base)));
    }

    let scale = if (cfg.mult_scale - 0.1).abs() < 1e-15 { "/10".to_string() } else { format!("*{}", num(cfg.mult_scale)) };
    let mut node_map = Vec::with_capacity(n - 1);
    let mut prev = "s1".to_string();
    for stage in 0..n - 1 {
        let k = stage + 1;
        let (ix, iy) = cfg.input_offsets(stage);
        let operand = |node: &str, off: f64| {
            if off == 0.0 {
                format!("V({node})")
            } else {
                format!("(V({node}){off:+e})")
            }
        };
        let mut expr = format!("{}*{}{}+V(z{k})", operand(&prev, ix), operand(&format!("s{}", k + 1), iy), scale);
        let out_off = cfg.output_offset(stage);
        if out_off != 0.0 {
            let _ = write!(expr, "{out_off:+e}");
        }
        c(format!("* stage {k}"));
        c(format!("BM{k} m{k} 0 V={expr}"));
        c(format!("VZ{k} z{k} 0 DC {}", num(cfg.z_compensation_at(stage))));
        c(format!("EA{k} a{k} 0 m{k} 0 {}", num(cfg.amp_gain)));
        node_map.push(StageNodes { multiplier: format!("m{k}"), z: format!("z{k}"), amplifier: format!("a{k}") });
        prev = format!("a{k}");
    }

    match spec.kind {
        FilterKind::OnePoleCascade => {
            let cap = 1.0 / (std::f64::consts::TAU * spec.cutoff_f0 * FILTER_RESISTOR_OHMS);
            for k in 1..=spec.order {
                c(format!("* low-pass section {k}"));
                c(format!("RF{k} {prev} rc{k} {}", num(FILTER_RESISTOR_OHMS)));
                c(format!("CF{k} rc{k} 0 {}", num(cap)));
                c(format!("EF{k} f{k} 0 rc{k} 0 {}", num(spec.per_stage_gain)));
                prev = format!("f{k}");
            }
        }
        FilterKind::Brickwall => {
            c(format!("* brick-wall low-pass at {} Hz is applied to the exported trace", num(spec.cutoff_f0)));
        }
        FilterKind::None => {}
    }
    c(format!("EOUT out 0 {prev} 0 1"));

    let plan = SamplingPlan::default();
    let period = 1.0 / (inst.gcd() as f64 * cfg.f_base);
    let step = MAX_TRAN_STEP.min(1.0 / (2.0 * 2.0 * top * cfg.oversample as f64));
    c(format!("RLOAD out 0 {}", num(1e6)));
    c(format!(".tran 0 {} {} {}", num(plan.stop(period)), num(plan.start(period)), num(step)));
    c(format!(".four {} V(out)", num(inst.gcd() as f64 * cfg.f_base)));

    Ok(NetlistDoc { title: format!("cosine product cascade for instance {inst}"), cards, node_map })
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(|ch: char| ch == ',' || ch == ';' || ch.is_whitespace()).filter(|s| !s.is_empty()).collect()
}

/// Reads two-column `time, volts` text (comma or whitespace separated, an
/// optional header). Variable-step data is linearly resampled at its smallest
/// step.
pub fn parse_trace_csv(text: &str) -> Result<SampledTrace> {
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    let mut seen_data_or_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('*') {
            continue;
        }
        let fields = split_fields(line);
        let parsed: Option<(f64, f64)> = match fields[..] {
            [t, v, ..] => t.parse().ok().zip(v.parse().ok()),
            _ => None,
        };
        match parsed {
            Some((t, v)) => rows.push((idx + 1, t, v)),
            None if !seen_data_or_header => {}
            None => return Err(Error::Parse { line: idx + 1, msg: format!("expected two numbers, got `{line}`") }),
        }
        seen_data_or_header = true;
    }
    if rows.len() < 2 {
        return Err(Error::Parse { line: 0, msg: format!("need at least 2 rows, got {}", rows.len()) });
    }
    for w in rows.windows(2) {
        if !(w[1].1 > w[0].1) {
            return Err(Error::Parse { line: w[1].0, msg: "time is not strictly increasing".into() });
        }
    }
    let t0 = rows[0].1;
    let span = rows[rows.len() - 1].1 - t0;
    let mean_step = span / (rows.len() - 1) as f64;
    let uniform = rows.windows(2).all(|w| ((w[1].1 - w[0].1) - mean_step).abs() <= 1e-6 * mean_step);
    if uniform {
        return Ok(SampledTrace {
            t_start: t0,
            tau: mean_step,
            values: rows.iter().map(|r| r.2).collect(),
            snap_offset: 0.0,
            uniform: true,
        });
    }
    let min_step = rows.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::INFINITY, f64::min);
    let tau = min_step.max(span / (MAX_RESAMPLED_POINTS - 1) as f64);
    let m = (span / tau * (1.0 + 1e-12)).floor() as usize + 1;
    let mut values = Vec::with_capacity(m);
    let mut j = 0;
    for k in 0..m {
        let t = t0 + k as f64 * tau;
        while j + 2 < rows.len() && rows[j + 1].1 <= t {
            j += 1;
        }
        let (ta, va) = (rows[j].1, rows[j].2);
        let (tb, vb) = (rows[j + 1].1, rows[j + 1].2);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        values.push(va + w * (vb - va));
    }
    Ok(SampledTrace { t_start: t0, tau, values, snap_offset: 0.0, uniform: false })
}
