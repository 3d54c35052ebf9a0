// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::f64::consts::TAU;

use cpi_oracle::analog_pipeline::NonidealityConfig;
use cpi_oracle::calibration::measure_dc;
use cpi_oracle::dsp::*;
use cpi_oracle::exact_oracle::ideal_dc;
use cpi_oracle::instances::{parse_instance, CpiInstance};
use cpi_oracle::netlist::*;

fn inst(s: &str) -> CpiInstance {
    parse_instance(s).unwrap()
}

fn offset_cfg() -> NonidealityConfig {
    NonidealityConfig {
        mult_output_offset: vec![0.00422, 0.00431, 0.00447],
        mult_input_offset: vec![0.0051, -0.0048, 0.0046, 0.0053, -0.0049, 0.0050],
        z_compensation: vec![-0.01, 0.002, 0.0],
        ..NonidealityConfig::ideal()
    }
}

// Minimal grammar check for the card subset the emitter uses.
fn validate_card(card: &str) -> Result<(), String> {
    let f: Vec<&str> = card.split_whitespace().collect();
    let number = |s: &str| s.parse::<f64>().map(|_| ()).map_err(|_| format!("`{s}` is not a number in `{card}`"));
    let node = |s: &str| {
        if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            Ok(())
        } else {
            Err(format!("bad node `{s}` in `{card}`"))
        }
    };
    match card.chars().next() {
        None => Err("empty card".into()),
        Some('*') => Ok(()),
        Some('.') => match f[0] {
            ".tran" => {
                if f.len() != 5 {
                    return Err(format!("`{card}` needs 4 values"));
                }
                f[1..].iter().try_for_each(|s| number(s))
            }
            ".four" => {
                number(f[1])?;
                if f.len() >= 3 && f[2..].iter().all(|s| s.starts_with("V(") && s.ends_with(')')) {
                    Ok(())
                } else {
                    Err(format!("`{card}` needs output vectors"))
                }
            }
            other => Err(format!("unexpected directive {other}")),
        },
        Some('V') => {
            node(f[1])?;
            node(f[2])?;
            if f[3] == "DC" {
                return number(f[4]);
            }
            let rest = f[3..].join(" ");
            let inner = rest.strip_prefix("SIN(").and_then(|s| s.strip_suffix(')')).ok_or(format!("bad source `{card}`"))?;
            let vals: Vec<&str> = inner.split_whitespace().collect();
            if vals.len() != 6 {
                return Err(format!("SIN needs 6 values in `{card}`"));
            }
            vals.iter().try_for_each(|s| number(s))
        }
        Some('B') => {
            node(f[1])?;
            node(f[2])?;
            if f.len() == 4 && f[3].starts_with("V=") { Ok(()) } else { Err(format!("bad behavioural source `{card}`")) }
        }
        Some('E') => {
            if f.len() != 6 {
                return Err(format!("`{card}` needs 4 nodes and a gain"));
            }
            f[1..5].iter().try_for_each(|s| node(s))?;
            number(f[5])
        }
        Some('R') | Some('C') => {
            if f.len() != 4 {
                return Err(format!("`{card}` needs 2 nodes and a value"));
            }
            node(f[1])?;
            node(f[2])?;
            number(f[3])
        }
        Some(c) => Err(format!("unknown element letter {c}")),
    }
}

// Evaluator for the behavioural expressions: numbers, V(node), + - * / and
// parentheses.
struct Expr<'a> {
    s: &'a [u8],
    i: usize,
}

impl Expr<'_> {
    fn sum(&mut self, v: &dyn Fn(&str) -> f64) -> f64 {
        let mut acc = self.product(v);
        while self.i < self.s.len() && matches!(self.s[self.i], b'+' | b'-') {
            let op = self.s[self.i];
            self.i += 1;
            let rhs = self.product(v);
            acc = if op == b'+' { acc + rhs } else { acc - rhs };
        }
        acc
    }

    fn product(&mut self, v: &dyn Fn(&str) -> f64) -> f64 {
        let mut acc = self.atom(v);
        while self.i < self.s.len() && matches!(self.s[self.i], b'*' | b'/') {
            let op = self.s[self.i];
            self.i += 1;
            let rhs = self.atom(v);
            acc = if op == b'*' { acc * rhs } else { acc / rhs };
        }
        acc
    }

    fn atom(&mut self, v: &dyn Fn(&str) -> f64) -> f64 {
        match self.s[self.i] {
            b'(' => {
                self.i += 1;
                let x = self.sum(v);
                assert_eq!(self.s[self.i], b')');
                self.i += 1;
                x
            }
            b'V' => {
                let close = self.i + self.s[self.i..].iter().position(|&c| c == b')').unwrap();
                let name = std::str::from_utf8(&self.s[self.i + 2..close]).unwrap();
                self.i = close + 1;
                v(name)
            }
            _ => {
                let start = self.i;
                while self.i < self.s.len() {
                    let c = self.s[self.i];
                    let exp_sign = matches!(c, b'+' | b'-') && matches!(self.s[self.i - 1], b'e' | b'E');
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.i += 1;
                    } else {
                        break;
                    }
                }
                std::str::from_utf8(&self.s[start..self.i]).unwrap().parse().unwrap()
            }
        }
    }
}

enum Element {
    Sin { amp: f64, freq: f64 },
    Dc(f64),
    Behavioural(String),
    Gain { input: String, gain: f64 },
}

// Interprets the netlist for the brick-wall and unfiltered variants, where
// `out` is a memoryless function of time.
fn interpret(doc: &NetlistDoc) -> impl Fn(f64) -> f64 + '_ {
    let mut elems: HashMap<String, Element> = HashMap::new();
    for card in &doc.cards {
        let f: Vec<&str> = card.split_whitespace().collect();
        match card.chars().next() {
            Some('V') if f[3] == "DC" => {
                elems.insert(f[1].into(), Element::Dc(f[4].parse().unwrap()));
            }
            Some('V') => {
                let amp = f[4].parse().unwrap();
                let freq = f[5].parse().unwrap();
                assert_eq!(f[8].trim_end_matches(')'), "90");
                elems.insert(f[1].into(), Element::Sin { amp, freq });
            }
            Some('B') => {
                elems.insert(f[1].into(), Element::Behavioural(f[3].trim_start_matches("V=").into()));
            }
            Some('E') => {
                assert_eq!((f[2], f[4]), ("0", "0"));
                elems.insert(f[1].into(), Element::Gain { input: f[3].into(), gain: f[5].parse().unwrap() });
            }
            Some('R') if f[0] == "RLOAD" => {}
            Some('R') | Some('C') => panic!("interpreter does not handle RC sections"),
            _ => {}
        }
    }
    move |t| {
        fn eval(name: &str, t: f64, elems: &HashMap<String, Element>) -> f64 {
            match &elems[name] {
                Element::Sin { amp, freq } => amp * (TAU * freq * t + TAU / 4.0).sin(),
                Element::Dc(v) => *v,
                Element::Gain { input, gain } => gain * eval(input, t, elems),
                Element::Behavioural(e) => {
                    let lookup = |n: &str| eval(n, t, elems);
                    Expr { s: e.as_bytes(), i: 0 }.sum(&lookup)
                }
            }
        }
        eval("out", t, &elems)
    }
}

#[test]
fn every_card_is_well_formed() {
    let specs = [FilterSpec::none(), FilterSpec::brickwall(5e3), FilterSpec::one_pole(5e3, 3, 2.0)];
    for s in ["3 2 5", "3 6 4", "1 9 1 4", "30 90 20 40"] {
        for cfg in [NonidealityConfig::default(), offset_cfg()] {
            for spec in &specs {
                let doc = emit_netlist(&inst(s), &cfg, spec).unwrap();
                let text = doc.to_string();
                let lines: Vec<&str> = text.lines().collect();
                assert!(lines[0].starts_with('*'));
                assert_eq!(*lines.last().unwrap(), ".end");
                for card in &lines[1..lines.len() - 1] {
                    validate_card(card).unwrap();
                }
            }
        }
    }
}

#[test]
fn each_stage_output_feeds_exactly_one_card() {
    for spec in [FilterSpec::none(), FilterSpec::one_pole(5e3, 2, 2.0)] {
        let doc = emit_netlist(&inst("1 9 1 4"), &NonidealityConfig::default(), &spec).unwrap();
        assert_eq!(doc.node_map.len(), 3);
        for stage in &doc.node_map {
            let consumers = doc
                .cards
                .iter()
                .filter(|c| !c.starts_with('*'))
                .filter(|c| {
                    let f: Vec<&str> = c.split_whitespace().collect();
                    let drives = f[0].starts_with("EA") && f[1] == stage.amplifier;
                    let as_input = !drives && f.iter().skip(1).any(|w| *w == stage.amplifier);
                    as_input || c.contains(&format!("V({})", stage.amplifier))
                })
                .count();
            assert_eq!(consumers, 1, "{}", stage.amplifier);
            let m_users = doc.cards.iter().filter(|c| c.split_whitespace().nth(3) == Some(stage.multiplier.as_str())).count();
            assert_eq!(m_users, 1);
        }
    }
}

#[test]
fn interpreted_netlist_reproduces_the_dc() {
    let cases = [("3 2 5", NonidealityConfig::ideal()), ("3 6 4", NonidealityConfig::ideal()), ("1 9 1 4", offset_cfg())];
    for (s, cfg) in cases {
        let i = inst(s);
        let spec = FilterSpec::none();
        let doc = emit_netlist(&i, &cfg, &spec).unwrap();
        let tran = doc.tran().unwrap();
        let out = interpret(&doc);
        let m = ((tran.stop - tran.start) / tran.max_step).round() as usize;
        let mean = (0..m).map(|k| out(tran.start + k as f64 * tran.max_step)).sum::<f64>() / m as f64;
        let plan = tran.sampling_plan(&i, cfg.f_base, SamplingPlan::default().tau);
        assert_eq!(plan, SamplingPlan::default());
        let library = measure_dc(&i, &cfg, &spec.into(), &plan).unwrap().dc;
        let scale = library.abs().max(0.05);
        assert!((mean - library).abs() <= 0.05 * scale, "{s}: {mean} vs {library}");
        if cfg == NonidealityConfig::ideal() {
            assert!((mean - ideal_dc(&i).unwrap()).abs() < 1e-3, "{s}");
        }
    }
}

#[test]
fn rc_sections_match_the_filter() {
    let spec = FilterSpec::one_pole(5e3, 4, 2.0);
    let doc = emit_netlist(&inst("3 2 5"), &NonidealityConfig::default(), &spec).unwrap();
    let caps: Vec<f64> = doc.cards.iter().filter(|c| c.starts_with("CF")).map(|c| c.split_whitespace().nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(caps.len(), 4);
    for c in caps {
        let f0 = 1.0 / (TAU * FILTER_RESISTOR_OHMS * c);
        assert!((f0 - 5e3).abs() < 1e-6);
    }
    let gains: f64 = doc
        .cards
        .iter()
        .filter(|c| c.starts_with("EF"))
        .map(|c| c.split_whitespace().nth(5).unwrap().parse::<f64>().unwrap())
        .product();
    assert_eq!(gains, spec.dc_gain());
}

#[test]
fn emission_is_deterministic() {
    let a = emit_netlist(&inst("3 6 4"), &offset_cfg(), &FilterSpec::one_pole(5e3, 3, 2.0)).unwrap();
    let b = emit_netlist(&inst("3 6 4"), &offset_cfg(), &FilterSpec::one_pole(5e3, 3, 2.0)).unwrap();
    assert_eq!(a.to_string(), b.to_string());
}

#[test]
fn tran_window_and_step() {
    let i = inst("3 6 4");
    let doc = emit_netlist(&i, &NonidealityConfig::default(), &FilterSpec::none()).unwrap();
    let tran = doc.tran().unwrap();
    assert!((tran.start - 1.2e-3).abs() < 1e-12);
    assert!((tran.stop - 3e-3).abs() < 1e-12);
    assert!(tran.max_step <= MAX_TRAN_STEP);
    assert!(tran.max_step <= 1.0 / (2.0 * 13.0 * 1e4));
}

#[test]
fn variable_step_trace_mean_matches_trapezoid() {
    // Uneven steps over whole periods of a 1 kHz tone riding on 0.3 V.
    let mut t = 0.0;
    let mut rows = Vec::new();
    let mut k = 0u64;
    while t <= 2e-3 {
        rows.push((t, 0.3 + (TAU * 1e3 * t).cos()));
        k += 1;
        t += if k.is_multiple_of(3) { 1.5e-6 } else { 0.7e-6 };
    }
    let text: String =
        std::iter::once("time,V(out)\n".to_string()).chain(rows.iter().map(|(t, v)| format!("{t:e},{v:e}\n"))).collect();
    let trace = parse_trace_csv(&text).unwrap();
    assert!(!trace.uniform);
    let trapezoid: f64 =
        rows.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum::<f64>() / (rows.last().unwrap().0 - rows[0].0);
    assert!((dc_component(&trace) - trapezoid).abs() < 1e-3);
    assert!((dc_component(&trace) - 0.3).abs() < 1e-3);
}

#[test]
fn exported_trace_round_trips() {
    let i = inst("3 2 5");
    let m = measure_dc(&i, &NonidealityConfig::ideal(), &FilterSpec::brickwall(5e3).into(), &SamplingPlan::default()).unwrap();
    let back = parse_trace_csv(&m.trace.to_csv()).unwrap();
    assert!(back.uniform);
    assert_eq!(back.len(), m.trace.len());
    assert!((dc_component(&back) - m.dc).abs() < 1e-12);
}

#[test]
fn malformed_traces_are_rejected() {
    assert!(parse_trace_csv("t,v\n0,1\n").is_err());
    assert!(parse_trace_csv("0,1\n1,2\n1,3\n").is_err());
    assert!(parse_trace_csv("0,1\n1,2\nfoo,bar\n").is_err());
    assert!(emit_netlist(&inst("5"), &NonidealityConfig::default(), &FilterSpec::none()).is_err());
}
