// SPDX-License-Identifier: Apache-2.0

//! Low-pass filtering, alignment-snapped sampling and Fourier analysis of
//! simulated signals.
//!
//! All filters act in the frequency domain on the periodic extension of the
//! signal grid. Because the decision only looks at the DC bin, the one-pole
//! cascade defaults to its magnitude response (zero phase).

use std::cell::RefCell;
use std::fmt::Write as _;
use std::str::FromStr;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::analog_pipeline::Signal;
use crate::error::{Error, Result};
use crate::exact_oracle::{FrequencyUnits, SpectralLine, Spectrum};
use crate::instances::CpiInstance;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Signed frequency of FFT bin `k` for a length-`n` transform with step `dt`.
fn bin_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    k / (n as f64 * dt)
}

/// Multiplies the spectrum of `samples` by `response(f)` and transforms back.
/// `response` must be Hermitian (`H(-f) = conj(H(f))`) for a real result.
pub(crate) fn filter_in_frequency_domain(
    samples: &[f64],
    dt: f64,
    response: impl Fn(f64) -> Complex64,
) -> Vec<f64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let (fwd, inv) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    });
    fwd.process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= response(bin_frequency(k, n, dt));
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    /// Ideal low-pass: everything at or above the cutoff is removed.
    Brickwall,
    /// `order` identical first-order sections `gain / (1 + j f/f0)`.
    OnePoleCascade,
    None,
}

impl FilterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Brickwall => "brickwall",
            Self::OnePoleCascade => "one-pole",
            Self::None => "none",
        }
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brickwall" => Ok(Self::Brickwall),
            "one-pole" | "one-pole-cascade" => Ok(Self::OnePoleCascade),
            "none" => Ok(Self::None),
            other => Err(Error::InvalidParameter(format!("unknown filter kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub cutoff_f0: f64,
    pub order: usize,
    pub per_stage_gain: f64,
    /// Apply only the magnitude response. When false the one-pole cascade
    /// uses its full complex response.
    pub zero_phase: bool,
}

impl FilterSpec {
    pub fn brickwall(cutoff_f0: f64) -> Self {
        Self { kind: FilterKind::Brickwall, cutoff_f0, order: 1, per_stage_gain: 1.0, zero_phase: true }
    }

    pub fn one_pole(cutoff_f0: f64, order: usize, per_stage_gain: f64) -> Self {
        Self { kind: FilterKind::OnePoleCascade, cutoff_f0, order, per_stage_gain, zero_phase: true }
    }

    pub fn none() -> Self {
        Self { kind: FilterKind::None, cutoff_f0: f64::INFINITY, order: 0, per_stage_gain: 1.0, zero_phase: true }
    }

    pub fn dc_gain(&self) -> f64 {
        match self.kind {
            FilterKind::None => 1.0,
            _ => self.per_stage_gain.powi(self.order as i32),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == FilterKind::None {
            return Ok(());
        }
        if !(self.cutoff_f0 > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff_f0 must be positive, got {}", self.cutoff_f0)));
        }
        if self.order == 0 {
            return Err(Error::InvalidParameter("filter order must be at least 1".into()));
        }
        Ok(())
    }

    /// Complex response at frequency `f` (Hz, signed).
    pub fn response(&self, f: f64) -> Complex64 {
        match self.kind {
            FilterKind::None => Complex64::new(1.0, 0.0),
            FilterKind::Brickwall => {
                if f.abs() < self.cutoff_f0 {
                    Complex64::new(self.dc_gain(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            FilterKind::OnePoleCascade => {
                let x = f / self.cutoff_f0;
                let stage = if self.zero_phase {
                    Complex64::new(self.per_stage_gain / (1.0 + x * x).sqrt(), 0.0)
                } else {
                    Complex64::new(self.per_stage_gain, 0.0) / Complex64::new(1.0, x)
                };
                stage.powu(self.order as u32)
            }
        }
    }
}

/// Filter choice that may depend on the instance size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterDesign {
    Fixed(FilterSpec),
    /// [`design_compensating_filter`] with order equal to the instance size.
    Compensating { cutoff_f0: f64 },
}

impl FilterDesign {
    pub fn for_size(&self, n: usize) -> FilterSpec {
        match *self {
            Self::Fixed(spec) => spec,
            Self::Compensating { cutoff_f0 } => design_compensating_filter(n, cutoff_f0),
        }
    }
}

impl From<FilterSpec> for FilterDesign {
    fn from(spec: FilterSpec) -> Self {
        Self::Fixed(spec)
    }
}

/// Default cutoff: half of the smallest line spacing at the default 10 kHz
/// per instance unit.
pub const DEFAULT_CUTOFF_HZ: f64 = 5_000.0;

pub fn apply_lowpass(sig: &Signal, spec: &FilterSpec) -> Signal {
    let samples = match spec.kind {
        FilterKind::None => sig.samples.clone(),
        _ => filter_in_frequency_domain(&sig.samples, sig.dt, |f| spec.response(f)),
    };
    Signal { samples, ..sig.clone() }
}

/// `n` first-order sections with gain 2 each, so the DC gain `2^n` cancels
/// the `1/2^n` decay of every spectral line of an `n`-fold product.
pub fn design_compensating_filter(n: usize, f0: f64) -> FilterSpec {
    FilterSpec::one_pole(f0, n.max(1), 2.0)
}

/// Equidistant record `(t_start + k tau, values[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrace {
    pub t_start: f64,
    pub tau: f64,
    pub values: Vec<f64>,
    /// Distance the requested start time was moved to land on an alignment
    /// instant (signed, seconds).
    pub snap_offset: f64,
    /// False when the trace was resampled from non-uniform source data.
    pub uniform: bool,
}

impl SampledTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.t_start + k as f64 * self.tau)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_s,volts\n");
        for (t, v) in self.times().zip(&self.values) {
            let _ = writeln!(s, "{t:e},{v:e}");
        }
        s
    }
}

/// Where and how densely to record the filtered signal, in alignment periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    pub tau: f64,
    pub start_periods: u32,
    pub duration_periods: u32,
}

impl Default for SamplingPlan {
    /// 2 µs steps from 12 to 30 alignment periods (1.2 ms to 3 ms at 10 kHz).
    fn default() -> Self {
        Self { tau: 2e-6, start_periods: 12, duration_periods: 18 }
    }
}

impl SamplingPlan {
    pub fn start(&self, period: f64) -> f64 {
        self.start_periods as f64 * period
    }

    pub fn duration(&self, period: f64) -> f64 {
        self.duration_periods as f64 * period
    }

    pub fn stop(&self, period: f64) -> f64 {
        (self.start_periods + self.duration_periods) as f64 * period
    }
}

/// Records `sig` (already filtered by `spec`) over `[t_start, t_start + duration)`.
///
/// The step is `min(tau, 1/(2 f0))` and the start is snapped to the nearest
/// alignment instant when the signal carries an alignment period.
pub fn sample_after_filter(
    sig: &Signal,
    spec: &FilterSpec,
    t_start: f64,
    duration: f64,
    tau: f64,
) -> Result<SampledTrace> {
    if t_start < 0.0 || !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("bad sampling request: start {t_start}, tau {tau}")));
    }
    let tau = match spec.kind {
        FilterKind::None => tau,
        _ => tau.min(1.0 / (2.0 * spec.cutoff_f0)),
    };
    let (start, snap_offset) = match sig.alignment_period {
        Some(period) => {
            if duration < period * (1.0 - 1e-9) {
                return Err(Error::DurationTooShort { duration, period });
            }
            let snapped = (t_start / period).round() * period;
            (snapped, snapped - t_start)
        }
        None => (t_start, 0.0),
    };
    let m = ((duration / tau).round() as usize).max(1);
    let end = start + (m - 1) as f64 * tau;
    if start < sig.t0 - 1e-15 || end > sig.end_time() * (1.0 + 1e-12) {
        return Err(Error::WindowOutOfRange { start, end });
    }
    let values = (0..m).map(|k| sig.value_at(start + k as f64 * tau)).collect();
    Ok(SampledTrace { t_start: start, tau, values, snap_offset, uniform: true })
}

/// Two-sided DFT with amplitudes `|X_k| / m`. The DC line is the signed
/// sample mean, identical to [`dc_component`].
pub fn dft(trace: &SampledTrace) -> Spectrum {
    let m = trace.values.len();
    let mut buf: Vec<Complex64> = trace.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(m));
    fft.process(&mut buf);
    let mut lines: Vec<SpectralLine> = buf
        .iter()
        .enumerate()
        .map(|(k, c)| SpectralLine {
            frequency: bin_frequency(k, m, trace.tau),
            amplitude: if k == 0 { dc_component(trace) } else { c.norm() / m as f64 },
        })
        .collect();
    lines.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    Spectrum { lines, resolution: 1.0 / (m as f64 * trace.tau), units: FrequencyUnits::Hertz }
}

/// The DC estimate: arithmetic mean of the samples.
pub fn dc_component(trace: &SampledTrace) -> f64 {
    trace.values.iter().sum::<f64>() / trace.values.len() as f64
}

/// Physical sampling window of `plan` for `inst` at `f_base` Hz per unit:
/// `(t_start, duration)` in seconds.
pub fn plan_window(inst: &CpiInstance, f_base: f64, plan: &SamplingPlan) -> (f64, f64) {
    let period = 1.0 / (inst.gcd() as f64 * f_base);
    (plan.start(period), plan.duration(period))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid_signal(f: impl Fn(f64) -> f64, dt: f64, len: usize, period: Option<f64>) -> Signal {
        Signal {
            t0: 0.0,
            dt,
            samples: (0..len).map(|k| f(k as f64 * dt)).collect(),
            f_max_nominal: 0.0,
            alignment_period: period,
        }
    }

    #[test]
    fn brickwall_keeps_only_dc() {
        // 0.25 V + 40 kHz ripple over 20 periods of 10 kHz.
        let dt = 1e-7;
        let sig = grid_signal(|t| 0.25 + 0.3 * (2.0 * PI * 40e3 * t).cos(), dt, 20_000, Some(1e-4));
        let out = apply_lowpass(&sig, &FilterSpec::brickwall(5e3));
        assert!(out.samples.iter().all(|v| (v - 0.25).abs() < 1e-9));
    }

    #[test]
    fn one_pole_dc_gain() {
        let sig = grid_signal(|_| 1.0, 1e-6, 128, None);
        let out = apply_lowpass(&sig, &FilterSpec::one_pole(5e3, 3, 2.0));
        assert!(out.samples.iter().all(|v| (v - 8.0).abs() < 1e-12));
        let mut complex = FilterSpec::one_pole(5e3, 3, 2.0);
        complex.zero_phase = false;
        let out = apply_lowpass(&sig, &complex);
        assert!(out.samples.iter().all(|v| (v - 8.0).abs() < 1e-12));
    }

    #[test]
    fn compensating_filter_gains() {
        assert_eq!(design_compensating_filter(3, 5e3).dc_gain(), 8.0);
        assert_eq!(design_compensating_filter(1, 5e3).dc_gain(), 2.0);
        assert_eq!(design_compensating_filter(10, 5e3).dc_gain(), 1024.0);
        assert_eq!(design_compensating_filter(3, 5e3).order, 3);
        assert_eq!(
            FilterDesign::Compensating { cutoff_f0: 1e3 }.for_size(4),
            FilterSpec::one_pole(1e3, 4, 2.0)
        );
    }

    #[test]
    fn complex_one_pole_attenuates_like_magnitude() {
        let spec = FilterSpec { zero_phase: false, ..FilterSpec::one_pole(1e3, 2, 1.0) };
        let h = spec.response(1e3);
        assert!((h.norm() - 0.5).abs() < 1e-12);
        assert!((h.conj() - spec.response(-1e3)).norm() < 1e-15);
    }

    #[test]
    fn sampling_window_arithmetic() {
        let period = 1e-4;
        let sig = grid_signal(|_| 0.7, 4e-7, 7_600, Some(period));
        let trace = sample_after_filter(&sig, &FilterSpec::one_pole(5e3, 3, 2.0), 1.2e-3, 1.8e-3, 2e-6).unwrap();
        assert_eq!(trace.len(), 900);
        assert_eq!(trace.tau, 2e-6);
        assert!(trace.values.iter().all(|&v| v == 0.7));
        assert!(trace.snap_offset.abs() < 1e-15);
    }

    #[test]
    fn tau_is_clamped_to_sampling_theorem() {
        let sig = grid_signal(|_| 1.0, 1e-6, 10_001, Some(1e-3));
        let trace = sample_after_filter(&sig, &FilterSpec::brickwall(1e3), 0.0, 5e-3, 1e-3).unwrap();
        assert_eq!(trace.tau, 5e-4);
        assert_eq!(trace.len(), 10);
    }

    #[test]
    fn start_is_snapped_to_alignment() {
        let sig = grid_signal(|_| 1.0, 1e-6, 10_001, Some(1e-3));
        let trace = sample_after_filter(&sig, &FilterSpec::none(), 2.3e-3, 2e-3, 1e-5).unwrap();
        assert!((trace.t_start - 2e-3).abs() < 1e-15);
        assert!((trace.snap_offset + 0.3e-3).abs() < 1e-12);
    }

    #[test]
    fn sampling_errors() {
        let sig = grid_signal(|_| 1.0, 1e-6, 1_001, Some(1e-4));
        assert!(matches!(
            sample_after_filter(&sig, &FilterSpec::none(), 0.0, 5e-5, 1e-6),
            Err(Error::DurationTooShort { .. })
        ));
        assert!(matches!(
            sample_after_filter(&sig, &FilterSpec::none(), 0.0, 2e-3, 1e-6),
            Err(Error::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn dft_of_constant() {
        let trace = SampledTrace { t_start: 0.0, tau: 1e-6, values: vec![0.25; 64], snap_offset: 0.0, uniform: true };
        let s = dft(&trace);
        assert_eq!(s.dc(), 0.25);
        assert!(s.lines.iter().filter(|l| l.frequency != 0.0).all(|l| l.amplitude <= 1e-12));
        assert!((s.resolution - 1.0 / 64e-6).abs() < 1e-6);
    }

    #[test]
    fn dft_of_product_of_two_cosines() {
        // cos(2π 20k t) cos(2π 30k t) sampled over one 100 µs period.
        let values: Vec<f64> = (0..100)
            .map(|k| {
                let t = k as f64 * 1e-6;
                (2.0 * PI * 20e3 * t).cos() * (2.0 * PI * 30e3 * t).cos()
            })
            .collect();
        let trace = SampledTrace { t_start: 0.0, tau: 1e-6, values, snap_offset: 0.0, uniform: true };
        let s = dft(&trace);
        for f in [-50e3, -10e3, 10e3, 50e3] {
            assert!((s.amplitude_at(f, 1.0).unwrap() - 0.25).abs() < 1e-12);
        }
        assert!(s.dc().abs() < 1e-12);
    }

    #[test]
    fn dc_bin_is_the_mean() {
        let trace = SampledTrace {
            t_start: 0.0,
            tau: 1.0,
            values: vec![0.1, 0.7, -0.3, 0.9, 0.2],
            snap_offset: 0.0,
            uniform: true,
        };
        assert_eq!(dft(&trace).dc(), dc_component(&trace));
    }
}
