// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::TAU;

use cpi_oracle::analog_pipeline::*;
use cpi_oracle::calibration::*;
use cpi_oracle::dsp::*;
use cpi_oracle::exact_oracle::{decide_dp, ideal_dc};
use cpi_oracle::instances::{parse_instance, CpiInstance};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inst(s: &str) -> CpiInstance {
    parse_instance(s).unwrap()
}

fn brickwall() -> FilterDesign {
    FilterSpec::brickwall(DEFAULT_CUTOFF_HZ).into()
}

fn dc(i: &CpiInstance, cfg: &NonidealityConfig, design: &FilterDesign) -> f64 {
    measure_dc(i, cfg, design, &SamplingPlan::default()).unwrap().dc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ideal_cascade_is_the_closed_form_product(v in prop::collection::vec(1u64..=12, 1..=6)) {
        let i = CpiInstance::new(v.clone()).unwrap();
        let cfg = NonidealityConfig::ideal();
        let period = 1.0 / (i.gcd() as f64 * cfg.f_base);
        let grid = TimeGrid::new(&i, &cfg, period, None).unwrap();
        let trace = run_cascade(&i, &cfg, &grid).unwrap();
        let worst = (0..grid.len)
            .map(|k| {
                let t = grid.time(k);
                let exact: f64 = v.iter().map(|&a| (TAU * a as f64 * cfg.f_base * t).cos()).product();
                (trace.final_signal.samples[k] - exact).abs()
            })
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-6 * v.len() as f64, "{worst}");
    }

    #[test]
    fn filters_keep_dc(seed in any::<u64>(), order in 1usize..=8, gain in 0.5f64..3.0, kind in 0u8..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = rng.random_range(16..2048);
        let samples: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0) + 0.3).collect();
        let sig = Signal { t0: 0.0, dt: 1e-6, samples, f_max_nominal: 0.0, alignment_period: None };
        let spec = match kind {
            0 => FilterSpec::brickwall(rng.random_range(1e3..4e5)),
            1 => FilterSpec::one_pole(rng.random_range(1e3..4e5), order, gain),
            _ => FilterSpec::none(),
        };
        let out = apply_lowpass(&sig, &spec);
        prop_assert!((out.mean() / spec.dc_gain() - sig.mean()).abs() <= 1e-9 * sig.max_abs());
    }
}

#[test]
fn gain_errors_scale_the_dc() {
    for s in ["3 2 5", "1 1", "30 90 20 40", "2 2 4"] {
        let i = inst(s);
        let base = dc(&i, &NonidealityConfig::ideal(), &brickwall());
        let gains = [0.9, 1.07, 1.2, 0.95];
        let cfg = NonidealityConfig { source_gain: gains[..i.len()].to_vec(), ..NonidealityConfig::ideal() };
        let scaled = dc(&i, &cfg, &brickwall());
        let expect: f64 = gains[..i.len()].iter().product();
        assert!((scaled / base - expect).abs() < 1e-6, "{s}");
    }
}

#[test]
fn identical_seeds_give_identical_traces() {
    let cfg = NonidealityConfig {
        noise_sigma: 1e-3,
        freq_error_sigma: 1e-4,
        phase_error_sigma: 1e-2,
        mult_output_offset: vec![0.004],
        seed: 42,
        ..NonidealityConfig::default()
    };
    let plan = SamplingPlan::default();
    let a = simulate(&inst("3 6 4"), &cfg, &plan).unwrap();
    let b = simulate(&inst("3 6 4"), &cfg, &plan).unwrap();
    assert_eq!(a, b);
    let c = simulate(&inst("3 6 4"), &NonidealityConfig { seed: 43, ..cfg }, &plan).unwrap();
    assert_ne!(a.final_signal.samples, c.final_signal.samples);
}

#[test]
fn stage_outputs_stay_within_rails() {
    let cfg = NonidealityConfig {
        source_amplitude: 4.0,
        amp_gain: 40.0,
        mult_output_offset: vec![0.5],
        supply_voltage: 10.0,
        ..NonidealityConfig::default()
    };
    let t = simulate(&inst("1 2 3 4 5"), &cfg, &SamplingPlan::default()).unwrap();
    for s in t.multiplier_outputs.iter().chain(&t.stage_outputs) {
        assert!(s.max_abs() <= cfg.supply_voltage);
    }
    assert!(t.stage_outputs.iter().any(|s| s.max_abs() == cfg.supply_voltage));
}

#[test]
fn last_stage_offset_propagates_through_the_amplifier() {
    for s in ["3 6 4", "2 3", "1 9 1 4"] {
        let i = inst(s);
        let mut offsets = vec![0.0; i.len() - 1];
        *offsets.last_mut().unwrap() = 0.0045;
        let cfg = NonidealityConfig { mult_output_offset: offsets, ..NonidealityConfig::ideal() };
        let got = dc(&i, &cfg, &brickwall());
        assert!((got - 0.0045 * cfg.amp_gain).abs() < 1e-6, "{s}: {got}");
    }
}

#[test]
fn dc_does_not_depend_on_tau() {
    let cfg = NonidealityConfig::ideal();
    for s in ["3 2 5", "3 6 4", "1 1", "30 90 20 40"] {
        let i = inst(s);
        let spec = FilterSpec::brickwall(DEFAULT_CUTOFF_HZ);
        let mut values = Vec::new();
        for tau in [2e-6, 1e-6, 5e-7] {
            let plan = SamplingPlan { tau, ..SamplingPlan::default() };
            values.push(measure_dc(&i, &cfg, &spec.into(), &plan).unwrap().dc);
        }
        assert!((values[0] - values[1]).abs() < 1e-9 && (values[1] - values[2]).abs() < 1e-9, "{s}");
    }
}

#[test]
fn dft_dc_bin_is_the_sample_mean() {
    let m = measure_dc(&inst("3 2 5"), &NonidealityConfig::default(), &FilterSpec::none().into(), &SamplingPlan::default())
        .unwrap();
    assert_eq!(dft(&m.trace).dc(), dc_component(&m.trace));
    assert_eq!(dft(&m.trace).dc(), m.dc);
}

#[test]
fn default_window_is_900_samples() {
    let m = measure_dc(&inst("3 6 4"), &NonidealityConfig::default(), &brickwall(), &SamplingPlan::default()).unwrap();
    assert_eq!(m.trace.len(), 900);
    assert!((m.trace.t_start - 1.2e-3).abs() < 1e-12);
    assert!((m.trace.tau - 2e-6).abs() < 1e-18);
}

#[test]
fn compensation_never_increases_no_instance_dc() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for s in ["3 6 4", "1 9 1 4", "2 3", "5 1 1"] {
        let i = inst(s);
        assert!(!decide_dp(&i).unwrap());
        let offsets: Vec<f64> = (0..i.len() - 1).map(|_| rng.random_range(0.003..0.006)).collect();
        let cfg = NonidealityConfig { mult_output_offset: offsets, ..NonidealityConfig::ideal() };
        let before = dc(&i, &cfg, &brickwall()).abs();
        let (compensated, _) = calibrate_offsets(&i, &cfg, &SamplingPlan::default()).unwrap();
        let after = dc(&i, &compensated, &brickwall()).abs();
        assert!(after < before, "{s}: {after} vs {before}");
    }
}

#[test]
fn gain_scaling_keeps_decisions() {
    let yes = [inst("3 2 5"), inst("3 7 4")];
    let no = [inst("3 6 4"), inst("2 3 7")];
    let plan = SamplingPlan::default();
    let base_cfg = NonidealityConfig { mult_output_offset: vec![0.004, 0.0045], ..NonidealityConfig::ideal() };
    let r = 1.3f64;
    let scaled_cfg = NonidealityConfig { source_amplitude: r, ..base_cfg.clone() };
    let t0 = bootstrap_threshold(&yes, &no, &base_cfg, &brickwall(), &plan, CutRule::GeometricMean).unwrap();
    let t1 = bootstrap_threshold(&yes, &no, &scaled_cfg, &brickwall(), &plan, CutRule::GeometricMean).unwrap();
    let ideal = NonidealityConfig::ideal();
    let ideal_scaled = NonidealityConfig { source_amplitude: r, ..ideal.clone() };
    let b0 = bootstrap_threshold(&yes, &no, &ideal, &brickwall(), &plan, CutRule::Midpoint).unwrap();
    let b1 = bootstrap_threshold(&yes, &no, &ideal_scaled, &brickwall(), &plan, CutRule::Midpoint).unwrap();
    assert!((b1.yes_band_min / b0.yes_band_min - r.powi(3)).abs() < 1e-9);
    assert!((b1.cut / b0.cut - r.powi(3)).abs() < 1e-6);
    for i in ["3 2 5", "3 6 4", "1 2 3", "2 3 7", "4 4 4"] {
        let i = inst(i);
        let a = decide_analog(&i, &base_cfg, &brickwall(), &plan, &t0, false).unwrap();
        let b = decide_analog(&i, &scaled_cfg, &brickwall(), &plan, &t1, false).unwrap();
        assert_eq!(a.answer, b.answer);
    }
}

#[test]
fn ideal_pipeline_dc_equals_sign_vector_fraction() {
    for s in ["3 2 5", "3 6 4", "1 1", "1 2 3 4", "5 5 5 5", "7 3 2 1 1"] {
        let i = inst(s);
        assert!((dc(&i, &NonidealityConfig::ideal(), &brickwall()) - ideal_dc(&i).unwrap()).abs() < 1e-9, "{s}");
    }
}

#[test]
fn perturbation_frequency_matches_closed_form() {
    let trials = 10_000;
    let (n, sigma, delta) = (4, 0.7, 1.0);
    let base = inst("3 2 5 4");
    let hits = (0..trials)
        .filter(|&t| {
            let p = perturb_to_no_instance(&base, sigma, delta, t).unwrap();
            let shift: f64 = p.frequencies.iter().zip(base.values()).map(|(f, &a)| f - a as f64).sum();
            shift.abs() <= delta
        })
        .count();
    let p = false_dc_probability(n, sigma, delta);
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    assert!(((hits as f64 / trials as f64) - p).abs() <= 3.0 * se);
}

#[test]
fn grid_too_coarse_is_rejected() {
    let i = inst("3 2 5");
    let cfg = NonidealityConfig::ideal();
    let mut grid = TimeGrid::for_plan(&i, &cfg, &SamplingPlan::default()).unwrap();
    grid.dt *= 4.0;
    assert!(matches!(synthesize_sources(&i, &cfg, &grid), Err(cpi_oracle::Error::GridTooCoarse { .. })));
}

#[test]
fn window_fits_when_tau_does_not_divide_the_period() {
    for s in ["3", "7", "3 3", "9 6 3"] {
        let i = inst(s);
        let m = measure_dc(&i, &NonidealityConfig::ideal(), &brickwall(), &SamplingPlan::default()).unwrap();
        assert!((m.dc - ideal_dc(&i).unwrap()).abs() < 1e-9, "{s}");
    }
}
