// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the multiplier bandwidth limit `f*` shapes a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandwidthModel {
    /// Single pole at `f*`: `|H(f)| = 1/sqrt(1 + (f/f*)^2)`.
    OnePole,
    /// Everything above `f*` is removed.
    HardCutoff,
    None,
}

impl BandwidthModel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::OnePole => "one-pole",
            Self::HardCutoff => "hard-cutoff",
            Self::None => "none",
        }
    }

    /// Magnitude response at `f` Hz.
    pub fn gain(self, f: f64, f_star: f64) -> f64 {
        match self {
            Self::OnePole => 1.0 / (1.0 + (f / f_star).powi(2)).sqrt(),
            Self::HardCutoff => {
                if f.abs() <= f_star {
                    1.0
                } else {
                    0.0
                }
            }
            Self::None => 1.0,
        }
    }
}

impl FromStr for BandwidthModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-pole" => Ok(Self::OnePole),
            "hard-cutoff" => Ok(Self::HardCutoff),
            "none" => Ok(Self::None),
            other => Err(Error::InvalidParameter(format!("unknown bandwidth model `{other}`"))),
        }
    }
}

/// Whether the bandwidth limit acts on the multiplier output or on both inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandwidthPlacement {
    Output,
    Inputs,
}

impl FromStr for BandwidthPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "output" => Ok(Self::Output),
            "inputs" => Ok(Self::Inputs),
            other => Err(Error::InvalidParameter(format!("unknown bandwidth placement `{other}`"))),
        }
    }
}

/// Every analogue imperfection of the multiplier cascade.
///
/// List-valued fields are indexed by stage (`mult_input_offset` by input,
/// two per stage: x then y). A single-element list applies to every stage;
/// indices past the end of a longer list read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NonidealityConfig {
    /// Hz per instance unit.
    pub f_base: f64,
    /// Symmetric supply rail, volts.
    pub supply_voltage: f64,
    pub source_amplitude: f64,
    /// Per-source amplitude factors (empty means 1 for all sources).
    pub source_gain: Vec<f64>,
    pub mult_scale: f64,
    pub mult_output_offset: Vec<f64>,
    pub mult_input_offset: Vec<f64>,
    /// Voltage applied to each multiplier's Z input.
    pub z_compensation: Vec<f64>,
    pub amp_gain: f64,
    pub amp_offset: f64,
    pub bandwidth_f_star: f64,
    pub bandwidth_model: BandwidthModel,
    pub bandwidth_placement: BandwidthPlacement,
    /// Relative standard deviation of each source frequency.
    pub freq_error_sigma: f64,
    /// Standard deviation of each source phase, radians.
    pub phase_error_sigma: f64,
    /// White noise added at every multiplier output, volts.
    pub noise_sigma: f64,
    /// Grid points per period of the highest nominal frequency.
    pub oversample: usize,
    pub seed: u64,
}

impl Default for NonidealityConfig {
    fn default() -> Self {
        Self {
            f_base: 10_000.0,
            supply_voltage: 10.0,
            source_amplitude: 1.0,
            source_gain: Vec::new(),
            mult_scale: 0.1,
            mult_output_offset: Vec::new(),
            mult_input_offset: Vec::new(),
            z_compensation: Vec::new(),
            amp_gain: 10.0,
            amp_offset: 0.0,
            bandwidth_f_star: 120_000.0,
            bandwidth_model: BandwidthModel::OnePole,
            bandwidth_placement: BandwidthPlacement::Output,
            freq_error_sigma: 0.0,
            phase_error_sigma: 0.0,
            noise_sigma: 0.0,
            oversample: 16,
            seed: 0,
        }
    }
}

fn stage_value(list: &[f64], i: usize) -> f64 {
    match list {
        [] => 0.0,
        [v] => *v,
        _ => list.get(i).copied().unwrap_or(0.0),
    }
}

impl NonidealityConfig {
    /// Unit-gain stages, no offsets, errors, noise or bandwidth limit.
    pub fn ideal() -> Self {
        Self {
            bandwidth_model: BandwidthModel::None,
            bandwidth_f_star: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn output_offset(&self, stage: usize) -> f64 {
        stage_value(&self.mult_output_offset, stage)
    }

    /// Offsets of the x and y inputs of `stage`.
    pub fn input_offsets(&self, stage: usize) -> (f64, f64) {
        (
            stage_value(&self.mult_input_offset, 2 * stage),
            stage_value(&self.mult_input_offset, 2 * stage + 1),
        )
    }

    pub fn z_compensation_at(&self, stage: usize) -> f64 {
        self.z_compensation.get(stage).copied().unwrap_or(0.0)
    }

    pub fn source_gain_at(&self, i: usize) -> f64 {
        self.source_gain.get(i).copied().unwrap_or(1.0)
    }

    /// Net small-signal gain of one multiplier plus amplifier stage.
    pub fn stage_gain(&self) -> f64 {
        self.mult_scale * self.amp_gain
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.f_base > 0.0 && self.f_base.is_finite()) {
            return bad(format!("f_base must be positive, got {}", self.f_base));
        }
        if self.oversample < 4 {
            return bad(format!("oversample must be at least 4, got {}", self.oversample));
        }
        if !(self.supply_voltage > 0.0) {
            return bad(format!("supply_voltage must be positive, got {}", self.supply_voltage));
        }
        if !(self.bandwidth_f_star > 0.0) {
            return bad(format!("bandwidth_f_star must be positive, got {}", self.bandwidth_f_star));
        }
        for (name, v) in [
            ("freq_error_sigma", self.freq_error_sigma),
            ("phase_error_sigma", self.phase_error_sigma),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        Ok(())
    }

    /// Assigns a field from its textual form. Returns `false` for keys that
    /// are not config fields.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let num = |v: &str| -> Result<f64> {
            v.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("{key}: `{v}` is not a number")))
        };
        let list = |v: &str| -> Result<Vec<f64>> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(num).collect()
        };
        let int = |v: &str| -> Result<u64> {
            v.trim().parse::<u64>().map_err(|_| Error::InvalidParameter(format!("{key}: `{v}` is not an integer")))
        };
        match key {
            "f_base" => self.f_base = num(value)?,
            "supply_voltage" => self.supply_voltage = num(value)?,
            "source_amplitude" => self.source_amplitude = num(value)?,
            "source_gain" => self.source_gain = list(value)?,
            "mult_scale" => self.mult_scale = num(value)?,
            "mult_output_offset" => self.mult_output_offset = list(value)?,
            "mult_input_offset" => self.mult_input_offset = list(value)?,
            "z_compensation" => self.z_compensation = list(value)?,
            "amp_gain" => self.amp_gain = num(value)?,
            "amp_offset" => self.amp_offset = num(value)?,
            "bandwidth_f_star" => self.bandwidth_f_star = num(value)?,
            "bandwidth_model" => self.bandwidth_model = value.trim().parse()?,
            "bandwidth_placement" => self.bandwidth_placement = value.trim().parse()?,
            "freq_error_sigma" => self.freq_error_sigma = num(value)?,
            "phase_error_sigma" => self.phase_error_sigma = num(value)?,
            "noise_sigma" => self.noise_sigma = num(value)?,
            "oversample" => self.oversample = int(value)? as usize,
            "seed" => self.seed = int(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Canonical `key = value` listing of every field.
    pub fn to_kv(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "f_base = {:?}", self.f_base);
        let _ = writeln!(s, "supply_voltage = {:?}", self.supply_voltage);
        let _ = writeln!(s, "source_amplitude = {:?}", self.source_amplitude);
        let _ = writeln!(s, "source_gain = {}", list(&self.source_gain));
        let _ = writeln!(s, "mult_scale = {:?}", self.mult_scale);
        let _ = writeln!(s, "mult_output_offset = {}", list(&self.mult_output_offset));
        let _ = writeln!(s, "mult_input_offset = {}", list(&self.mult_input_offset));
        let _ = writeln!(s, "z_compensation = {}", list(&self.z_compensation));
        let _ = writeln!(s, "amp_gain = {:?}", self.amp_gain);
        let _ = writeln!(s, "amp_offset = {:?}", self.amp_offset);
        let _ = writeln!(s, "bandwidth_f_star = {:?}", self.bandwidth_f_star);
        let _ = writeln!(s, "bandwidth_model = {}", self.bandwidth_model.as_str());
        let _ = writeln!(
            s,
            "bandwidth_placement = {}",
            match self.bandwidth_placement {
                BandwidthPlacement::Output => "output",
                BandwidthPlacement::Inputs => "inputs",
            }
        );
        let _ = writeln!(s, "freq_error_sigma = {:?}", self.freq_error_sigma);
        let _ = writeln!(s, "phase_error_sigma = {:?}", self.phase_error_sigma);
        let _ = writeln!(s, "noise_sigma = {:?}", self.noise_sigma);
        let _ = writeln!(s, "oversample = {}", self.oversample);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}
