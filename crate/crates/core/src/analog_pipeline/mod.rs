// SPDX-License-Identifier: Apache-2.0

//! Dense-grid simulation of the multiplier cascade.
//!
//! Each stage is a four-quadrant multiplier (`x*y*scale + offset + Z`)
//! followed by a non-inverting amplifier. Every block is memoryless except the
//! multiplier bandwidth pole, which is applied in the frequency domain on the
//! periodic grid.

mod config;

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use config::{BandwidthModel, BandwidthPlacement, NonidealityConfig};

use crate::dsp::{filter_in_frequency_domain, SamplingPlan};
use crate::error::{Error, Result};
use crate::instances::CpiInstance;
use rustfft::num_complex::Complex64;

/// Uniformly sampled waveform starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
    /// Highest nominal frequency present, Hz.
    pub f_max_nominal: f64,
    /// Common period of the nominal sources, seconds.
    pub alignment_period: Option<f64>,
}

impl Signal {
    pub fn constant(value: f64, like: &Signal) -> Signal {
        Signal { samples: vec![value; like.samples.len()], f_max_nominal: 0.0, ..like.clone() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.t0 + self.samples.len().saturating_sub(1) as f64 * self.dt
    }

    /// Value at time `t`, linearly interpolated between grid points. Times
    /// within 1e-6 of a grid point read that point exactly.
    pub fn value_at(&self, t: f64) -> f64 {
        let pos = (t - self.t0) / self.dt;
        let nearest = pos.round();
        let last = self.samples.len() - 1;
        if (pos - nearest).abs() < 1e-6 {
            return self.samples[(nearest.max(0.0) as usize).min(last)];
        }
        let i = (pos.floor().max(0.0) as usize).min(last);
        if i == last {
            return self.samples[last];
        }
        let frac = pos - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }

    /// Mean over the whole grid.
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn same_grid(&self, other: &Signal) -> bool {
        self.t0 == other.t0 && self.dt == other.dt && self.samples.len() == other.samples.len()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_s,volts\n");
        for (k, v) in self.samples.iter().enumerate() {
            let _ = writeln!(s, "{:e},{v:e}", self.t0 + k as f64 * self.dt);
        }
        s
    }
}

/// Simulation grid for one instance: `points_per_period` samples per
/// alignment period, `len` samples from `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub len: usize,
    pub points_per_period: usize,
    pub alignment_period: f64,
    pub f_max_nominal: f64,
}

impl TimeGrid {
    /// Grid covering `[0, span)` with a whole number of alignment periods.
    /// When `step_hint` divides the alignment period, the grid is refined so
    /// that every multiple of it is a grid point.
    pub fn new(inst: &CpiInstance, cfg: &NonidealityConfig, span: f64, step_hint: Option<f64>) -> Result<Self> {
        cfg.validate()?;
        let g = inst.gcd();
        let period = 1.0 / (g as f64 * cfg.f_base);
        let cycles_per_period = inst.sum() / g;
        let mut points = (cfg.oversample as u128 * cycles_per_period as u128) as usize;
        if let Some(step) = step_hint {
            let ratio = period / step;
            let r = ratio.round();
            if r >= 1.0 && (ratio - r).abs() <= 1e-9 * ratio {
                let r = r as usize;
                points = points.div_ceil(r) * r;
            }
        }
        let dt = period / points as f64;
        // Whole periods only, so the grid is exactly periodic.
        let periods = ((span / period) - 1e-9).ceil().max(1.0) as usize;
        let len = periods * points;
        Ok(Self {
            dt,
            len,
            points_per_period: points,
            alignment_period: period,
            f_max_nominal: inst.sum() as f64 * cfg.f_base,
        })
    }

    /// Grid long enough for `plan`, aligned with its sampling step.
    pub fn for_plan(inst: &CpiInstance, cfg: &NonidealityConfig, plan: &SamplingPlan) -> Result<Self> {
        let period = 1.0 / (inst.gcd() as f64 * cfg.f_base);
        let grid = Self::new(inst, cfg, plan.stop(period), Some(plan.tau))?;
        // When tau does not divide the period the last sample can fall past
        // the final grid point; one more period covers it.
        let samples = ((plan.duration(period) / plan.tau).round() as usize).max(1);
        let last = plan.start(period) + (samples - 1) as f64 * plan.tau;
        if last > grid.time(grid.len - 1) {
            return Self::new(inst, cfg, plan.stop(period) + period, Some(plan.tau));
        }
        Ok(grid)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Outputs of every node along the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineTrace {
    pub sources: Vec<Signal>,
    /// Raw multiplier outputs (the nodes where Z compensation acts).
    pub multiplier_outputs: Vec<Signal>,
    /// Output of each multiplier plus amplifier pair; `n - 1` entries.
    pub stage_outputs: Vec<Signal>,
    pub final_signal: Signal,
    /// Set when `Σ a_i * f_base` exceeds the multiplier bandwidth.
    pub bandwidth_warning: bool,
}

impl PipelineTrace {
    /// One `time_s,volts` CSV per stage output.
    pub fn stage_csvs(&self) -> Vec<String> {
        self.stage_outputs.iter().map(Signal::to_csv).collect()
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma is finite and positive"))
}

/// Cosine sources `A r_i cos(2π f_base a_i (1 + ε_i) t + φ_i)` on `grid`.
pub fn synthesize_sources(inst: &CpiInstance, cfg: &NonidealityConfig, grid: &TimeGrid) -> Result<Vec<Signal>> {
    cfg.validate()?;
    let f_max = inst.sum() as f64 * cfg.f_base;
    if grid.dt > (1.0 + 1e-9) / (cfg.oversample as f64 * f_max) {
        return Err(Error::GridTooCoarse { dt: grid.dt, f_max, oversample: cfg.oversample });
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let freq_err = normal(cfg.freq_error_sigma);
    let phase_err = normal(cfg.phase_error_sigma);
    let g = inst.gcd();
    let p = grid.points_per_period as u128;
    let mut out = Vec::with_capacity(inst.len());
    for (i, &a) in inst.values().iter().enumerate() {
        let eps = freq_err.map_or(0.0, |d| d.sample(&mut rng));
        let phi = phase_err.map_or(0.0, |d| d.sample(&mut rng));
        let amp = cfg.source_amplitude * cfg.source_gain_at(i);
        let samples = if eps == 0.0 {
            // Exact phase bookkeeping keeps nominal sources bit-periodic.
            let cycles = (a / g) as u128;
            (0..grid.len)
                .map(|k| amp * (TAU * ((cycles * k as u128) % p) as f64 / p as f64 + phi).cos())
                .collect()
        } else {
            let f = cfg.f_base * a as f64 * (1.0 + eps);
            (0..grid.len).map(|k| amp * (TAU * f * grid.time(k) + phi).cos()).collect()
        };
        out.push(Signal {
            t0: 0.0,
            dt: grid.dt,
            samples,
            f_max_nominal: a as f64 * cfg.f_base,
            alignment_period: Some(grid.alignment_period),
        });
    }
    Ok(out)
}

fn bandlimit(samples: &[f64], dt: f64, cfg: &NonidealityConfig) -> Vec<f64> {
    let (model, f_star) = (cfg.bandwidth_model, cfg.bandwidth_f_star);
    filter_in_frequency_domain(samples, dt, |f| Complex64::new(model.gain(f, f_star), 0.0))
}

/// One four-quadrant multiplier: offsets and Z input, noise, rail clamp, then
/// the bandwidth pole.
pub fn multiply_stage(x: &Signal, y: &Signal, cfg: &NonidealityConfig, stage: usize) -> Result<Signal> {
    if !x.same_grid(y) {
        return Err(Error::GridMismatch);
    }
    let limited = cfg.bandwidth_model != BandwidthModel::None;
    let (xs, ys) = if limited && cfg.bandwidth_placement == BandwidthPlacement::Inputs {
        (bandlimit(&x.samples, x.dt, cfg), bandlimit(&y.samples, y.dt, cfg))
    } else {
        (x.samples.clone(), y.samples.clone())
    };
    let (ix, iy) = cfg.input_offsets(stage);
    let bias = cfg.output_offset(stage) + cfg.z_compensation_at(stage);
    let rail = cfg.supply_voltage;
    let noise = normal(cfg.noise_sigma);
    let mut rng = stream_rng(cfg.seed, stage as u64 + 1);
    let mut out: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(&a, &b)| {
            let n = noise.map_or(0.0, |d| d.sample(&mut rng));
            ((a + ix) * (b + iy) * cfg.mult_scale + bias + n).clamp(-rail, rail)
        })
        .collect();
    if limited && cfg.bandwidth_placement == BandwidthPlacement::Output {
        out = bandlimit(&out, x.dt, cfg);
    }
    Ok(Signal {
        samples: out,
        f_max_nominal: x.f_max_nominal + y.f_max_nominal,
        alignment_period: x.alignment_period.or(y.alignment_period),
        ..x.clone()
    })
}

/// Non-inverting amplifier with rail clamp.
pub fn amplify(x: &Signal, cfg: &NonidealityConfig) -> Signal {
    let rail = cfg.supply_voltage;
    Signal {
        samples: x
            .samples
            .iter()
            .map(|&v| (cfg.amp_gain * v + cfg.amp_offset).clamp(-rail, rail))
            .collect(),
        ..x.clone()
    }
}

/// Left fold over the sources: `s_k = amplify(multiply(s_{k-1}, src_k))`.
pub fn run_cascade(inst: &CpiInstance, cfg: &NonidealityConfig, grid: &TimeGrid) -> Result<PipelineTrace> {
    let sources = synthesize_sources(inst, cfg, grid)?;
    let mut multiplier_outputs = Vec::with_capacity(inst.len().saturating_sub(1));
    let mut stage_outputs = Vec::with_capacity(inst.len().saturating_sub(1));
    let mut acc = sources[0].clone();
    for (stage, src) in sources.iter().enumerate().skip(1).map(|(i, s)| (i - 1, s)) {
        let m = multiply_stage(&acc, src, cfg, stage)?;
        acc = amplify(&m, cfg);
        multiplier_outputs.push(m);
        stage_outputs.push(acc.clone());
    }
    let bandwidth_warning = cfg.bandwidth_model != BandwidthModel::None
        && inst.sum() as f64 * cfg.f_base > cfg.bandwidth_f_star;
    Ok(PipelineTrace { sources, multiplier_outputs, stage_outputs, final_signal: acc, bandwidth_warning })
}

/// [`run_cascade`] on the grid of `plan`.
pub fn simulate(inst: &CpiInstance, cfg: &NonidealityConfig, plan: &SamplingPlan) -> Result<PipelineTrace> {
    let grid = TimeGrid::for_plan(inst, cfg, plan)?;
    run_cascade(inst, cfg, &grid)
}
