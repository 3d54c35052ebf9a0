// SPDX-License-Identifier: Apache-2.0

//! Offset measurement and Z-input compensation, probable NO-instances, the
//! bootstrapped decision threshold and the end-to-end analogue decision.
//!
//! Polarity: a balanced split puts a line at DC, so YES means the measured DC
//! lies *above* the cut.

use std::fmt;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::analog_pipeline::{run_cascade, BandwidthModel, BandwidthPlacement, NonidealityConfig, TimeGrid};
use crate::dsp::{
    apply_lowpass, dc_component, plan_window, sample_after_filter, FilterDesign, FilterSpec, SampledTrace,
    SamplingPlan,
};
use crate::error::{Error, Result};
use crate::exact_oracle::decide_dp;
use crate::instances::CpiInstance;

/// DC of every multiplier output along the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetReport {
    pub per_stage_dc: Vec<f64>,
    pub instance_used: CpiInstance,
    pub is_no_instance: bool,
}

/// End-to-end result of steps 1 to 4: cascade, low-pass, sampling, DC.
#[derive(Debug, Clone, PartialEq)]
pub struct DcMeasurement {
    pub dc: f64,
    pub trace: SampledTrace,
    pub bandwidth_warning: bool,
}

/// Runs the cascade, filters its output with `design` and returns the sample
/// mean over the window of `plan`.
pub fn measure_dc(
    inst: &CpiInstance,
    cfg: &NonidealityConfig,
    design: &FilterDesign,
    plan: &SamplingPlan,
) -> Result<DcMeasurement> {
    let spec = design.for_size(inst.len());
    spec.validate()?;
    let grid = TimeGrid::for_plan(inst, cfg, plan)?;
    let cascade = run_cascade(inst, cfg, &grid)?;
    let filtered = apply_lowpass(&cascade.final_signal, &spec);
    let (start, duration) = plan_window(inst, cfg.f_base, plan);
    let trace = sample_after_filter(&filtered, &spec, start, duration, plan.tau)?;
    Ok(DcMeasurement { dc: dc_component(&trace), trace, bandwidth_warning: cascade.bandwidth_warning })
}

/// Measures the DC at each multiplier output. Meaningful on NO-instances,
/// where every one of them should be zero.
pub fn measure_stage_offsets(inst: &CpiInstance, cfg: &NonidealityConfig, plan: &SamplingPlan) -> Result<OffsetReport> {
    let grid = TimeGrid::for_plan(inst, cfg, plan)?;
    let cascade = run_cascade(inst, cfg, &grid)?;
    let (start, duration) = plan_window(inst, cfg.f_base, plan);
    let none = FilterSpec::none();
    let per_stage_dc = cascade
        .multiplier_outputs
        .iter()
        .map(|m| sample_after_filter(m, &none, start, duration, plan.tau).map(|t| dc_component(&t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OffsetReport { per_stage_dc, instance_used: inst.clone(), is_no_instance: !decide_dp(inst)? })
}

/// Drives each Z input against the measured offset: `z_k -= dc_k`. With an
/// uncompensated config this sets `z_k = -dc_k`.
pub fn compensate(cfg: &NonidealityConfig, report: &OffsetReport) -> Result<NonidealityConfig> {
    if !cfg.z_compensation.is_empty() && cfg.z_compensation.len() != report.per_stage_dc.len() {
        return Err(Error::ArityMismatch { expected: cfg.z_compensation.len(), got: report.per_stage_dc.len() });
    }
    let mut out = cfg.clone();
    out.z_compensation = report
        .per_stage_dc
        .iter()
        .enumerate()
        .map(|(k, dc)| cfg.z_compensation_at(k) - dc)
        .collect();
    Ok(out)
}

/// Measure-and-compensate repeated once per stage. Stage `k` only sees
/// upstream offsets, so after `k` rounds the first `k` stages are nulled.
/// Returns the compensated config and the first (uncompensated) report.
pub fn calibrate_offsets(
    inst: &CpiInstance,
    cfg: &NonidealityConfig,
    plan: &SamplingPlan,
) -> Result<(NonidealityConfig, OffsetReport)> {
    let first = measure_stage_offsets(inst, cfg, plan)?;
    let mut current = compensate(cfg, &first)?;
    for _ in 1..first.per_stage_dc.len() {
        let report = measure_stage_offsets(inst, &current, plan)?;
        current = compensate(&current, &report)?;
    }
    Ok((current, first))
}

/// A frequency-distorted copy of an instance used as a probable NO-instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedInstance {
    pub frequencies: Vec<f64>,
    /// Probability that the distortion sum lands within `±delta` of zero.
    pub p_false_dc: f64,
}

/// `P(|ε_1 + ... + ε_n| <= Δ)` for i.i.d. `ε_i ~ N(0, σ^2)`.
pub fn false_dc_probability(n: usize, sigma: f64, delta: f64) -> f64 {
    libm::erf(delta / (sigma * (2.0 * n as f64).sqrt()))
}

pub fn perturb_to_no_instance(inst: &CpiInstance, sigma: f64, delta: f64, seed: u64) -> Result<PerturbedInstance> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    Ok(PerturbedInstance {
        frequencies: inst.values().iter().map(|&a| a as f64 + dist.sample(&mut rng)).collect(),
        p_false_dc: false_dc_probability(inst.len(), sigma, delta),
    })
}

/// Voltage bands learned from labelled runs and the cut between them.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionThreshold {
    pub cut: f64,
    pub no_band_max: f64,
    pub yes_band_min: f64,
    pub training_size: usize,
    pub separable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutRule {
    /// `sqrt(no_max * yes_min)`; the bands differ by orders of magnitude.
    #[default]
    GeometricMean,
    Midpoint,
}

impl DecisionThreshold {
    /// Untrained threshold at half of the smallest DC a YES-instance can
    /// produce.
    pub fn nominal(yes_floor: f64) -> Self {
        Self { cut: yes_floor / 2.0, no_band_max: 0.0, yes_band_min: yes_floor, training_size: 0, separable: true }
    }

    pub fn from_bands(no_band_max: f64, yes_band_min: f64, training_size: usize, rule: CutRule) -> Self {
        let separable = no_band_max < yes_band_min;
        let midpoint = 0.5 * (no_band_max + yes_band_min);
        let cut = match rule {
            CutRule::GeometricMean if separable && no_band_max > 0.0 => (no_band_max * yes_band_min).sqrt(),
            _ => midpoint,
        };
        Self { cut, no_band_max, yes_band_min, training_size, separable }
    }

    pub fn to_kv(&self) -> String {
        format!(
            "cut = {:?}\nno_band_max = {:?}\nyes_band_min = {:?}\ntraining_size = {}\nseparable = {}\n",
            self.cut, self.no_band_max, self.yes_band_min, self.training_size, self.separable
        )
    }

    /// Reads the keys written by [`DecisionThreshold::to_kv`]; other keys are
    /// ignored.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut thr = Self::nominal(0.0);
        let mut seen = 0;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse { line: idx + 1, msg: "expected key = value".into() });
            };
            let v = v.trim();
            let perr = || Error::Parse { line: idx + 1, msg: format!("bad value `{v}`") };
            match k.trim() {
                "cut" => thr.cut = v.parse().map_err(|_| perr())?,
                "no_band_max" => thr.no_band_max = v.parse().map_err(|_| perr())?,
                "yes_band_min" => thr.yes_band_min = v.parse().map_err(|_| perr())?,
                "training_size" => thr.training_size = v.parse().map_err(|_| perr())?,
                "separable" => thr.separable = v.parse().map_err(|_| perr())?,
                _ => continue,
            }
            seen += 1;
        }
        if seen < 5 {
            return Err(Error::Parse { line: 0, msg: "calibration is missing threshold keys".into() });
        }
        Ok(thr)
    }
}

/// Smallest DC a YES-instance can reach through `cfg` and `spec`: one
/// balanced sign vector (`1/2^n`) times source amplitudes, stage gains, the
/// filter DC gain and the worst-case bandwidth attenuation of every partial
/// product.
pub fn nominal_yes_floor(inst: &CpiInstance, cfg: &NonidealityConfig, spec: &FilterSpec) -> f64 {
    let n = inst.len();
    let amplitude: f64 = (0..n).map(|i| cfg.source_amplitude * cfg.source_gain_at(i)).product();
    let stages = cfg.stage_gain().powi(n as i32 - 1);
    let model = cfg.bandwidth_model;
    let f_star = cfg.bandwidth_f_star;
    let mut bandwidth = 1.0;
    if model != BandwidthModel::None {
        let vals = inst.values();
        let mut partial = vals[0] as f64;
        for &a in &vals[1..] {
            bandwidth *= match cfg.bandwidth_placement {
                BandwidthPlacement::Output => model.gain((partial + a as f64) * cfg.f_base, f_star),
                BandwidthPlacement::Inputs => {
                    model.gain(partial * cfg.f_base, f_star) * model.gain(a as f64 * cfg.f_base, f_star)
                }
            };
            partial += a as f64;
        }
    }
    amplitude * stages * bandwidth * spec.dc_gain() / 2f64.powi(n as i32)
}

fn verify_labels(instances: &[CpiInstance], expect_yes: bool) -> Result<()> {
    for inst in instances {
        if decide_dp(inst)? != expect_yes {
            let (claimed, actual) = if expect_yes { ("YES", "NO") } else { ("NO", "YES") };
            return Err(Error::LabelMismatch(format!("`{inst}` is labelled {claimed} but is a {actual}-instance")));
        }
    }
    Ok(())
}

/// Learns the NO and YES voltage bands from labelled training runs.
pub fn bootstrap_threshold(
    train_yes: &[CpiInstance],
    train_no: &[CpiInstance],
    cfg: &NonidealityConfig,
    design: &FilterDesign,
    plan: &SamplingPlan,
    rule: CutRule,
) -> Result<DecisionThreshold> {
    if train_yes.is_empty() || train_no.is_empty() {
        return Err(Error::InvalidParameter("both training sets must be non-empty".into()));
    }
    verify_labels(train_yes, true)?;
    verify_labels(train_no, false)?;
    let run = |set: &[CpiInstance]| -> Result<Vec<f64>> {
        set.par_iter().map(|inst| measure_dc(inst, cfg, design, plan).map(|m| m.dc)).collect()
    };
    let yes = run(train_yes)?;
    let no = run(train_no)?;
    let no_max = no.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let yes_min = yes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DecisionThreshold::from_bands(no_max, yes_min, yes.len() + no.len(), rule))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "YES",
            Answer::No => "NO",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub answer: Answer,
    pub dc_measured: f64,
    pub threshold: DecisionThreshold,
    pub margin: f64,
    pub bandwidth_warning: bool,
}

impl Decision {
    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes
    }

    /// Key-value record for one decided instance.
    pub fn to_record(&self, inst: &CpiInstance, config_hash: &str, seed: u64) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "instance = {inst}");
        let _ = writeln!(s, "answer = {}", self.answer);
        let _ = writeln!(s, "dc_volts = {:e}", self.dc_measured);
        let _ = writeln!(s, "cut_volts = {:e}", self.threshold.cut);
        let _ = writeln!(s, "margin_volts = {:e}", self.margin);
        let _ = writeln!(s, "config_hash = {config_hash}");
        let _ = writeln!(s, "seed = {seed}");
        s
    }
}

/// The full analogue procedure: simulate, filter, sample, take the DC and
/// compare it with `thr.cut`.
pub fn decide_analog(
    inst: &CpiInstance,
    cfg: &NonidealityConfig,
    design: &FilterDesign,
    plan: &SamplingPlan,
    thr: &DecisionThreshold,
    strict: bool,
) -> Result<Decision> {
    if !thr.separable {
        return Err(Error::NotSeparable { no_max: thr.no_band_max, yes_min: thr.yes_band_min });
    }
    let m = measure_dc(inst, cfg, design, plan)?;
    if strict && m.bandwidth_warning {
        return Err(Error::BandwidthExceeded {
            needed: inst.sum() as f64 * cfg.f_base,
            f_star: cfg.bandwidth_f_star,
        });
    }
    let answer = if m.dc > thr.cut { Answer::Yes } else { Answer::No };
    Ok(Decision {
        answer,
        dc_measured: m.dc,
        threshold: thr.clone(),
        margin: (m.dc - thr.cut).abs(),
        bandwidth_warning: m.bandwidth_warning,
    })
}
