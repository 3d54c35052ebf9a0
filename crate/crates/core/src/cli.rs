// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit codes: `decide` returns 0 when every instance is NO and 1 when any is
//! YES; `sat` returns 10 for SATISFIABLE and 20 for UNSATISFIABLE; every
//! command returns 2 on error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::analog_pipeline::NonidealityConfig;
use crate::calibration::{
    bootstrap_threshold, calibrate_offsets, decide_analog, measure_dc, nominal_yes_floor, CutRule,
    DecisionThreshold, OffsetReport,
};
use crate::dsp::{dft, FilterDesign, FilterKind, FilterSpec, SamplingPlan, DEFAULT_CUTOFF_HZ};
use crate::error::{Error, Result};
use crate::exact_oracle::{analytic_spectrum, decide_bruteforce, decide_dp, FrequencyUnits};
use crate::instances::{parse_instance, parse_instance_file, random_instance, write_instance_file, CpiInstance, InstanceKind};
use crate::netlist::emit_netlist;
use crate::reductions::{extract_witness, parse_dimacs_with, AnalogBackend, OracleBackend};

pub const EXIT_NO: i32 = 0;
pub const EXIT_YES: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNSAT: i32 = 20;

#[derive(Debug, Parser)]
#[command(name = "cpi-oracle", version, about = "Simulated analogue cosine-product oracle for PARTITION")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat `key = value` file with nonideality and filter settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random stream (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = OracleKind::ExactDp)]
    pub oracle: OracleKind,
    #[arg(long, global = true, value_enum)]
    pub filter: Option<FilterArg>,
    /// Filter cutoff in Hz.
    #[arg(long, global = true)]
    pub f0: Option<f64>,
    /// Worker threads for batch commands.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Turn warnings (bandwidth, DIMACS counts) into errors.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    #[value(name = "exact-dp", alias = "exact")]
    ExactDp,
    #[value(name = "exact-bf")]
    ExactBf,
    Analog,
    #[value(name = "analog-ideal")]
    AnalogIdeal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterArg {
    Brickwall,
    /// Compensating cascade: order n, gain 2 per section.
    #[value(name = "one-pole")]
    OnePole,
    None,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide PARTITION for one or more instances.
    Decide {
        /// Instances as quoted lists, e.g. "3 2 5".
        instances: Vec<String>,
        /// File with one instance per line.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Threshold file written by `calibrate`.
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Also write the sampled trace of analogue runs (needs --out).
        #[arg(long)]
        trace: bool,
        /// Also write the measured spectrum of analogue runs (needs --out).
        #[arg(long)]
        spectrum: bool,
    },
    /// Analytic spectrum of the cosine product, optionally with a simulated one.
    Spectrum {
        instance: String,
        #[arg(long)]
        simulate: bool,
    },
    /// Learn offsets and the decision threshold from labelled instances.
    Calibrate {
        #[arg(long)]
        yes: PathBuf,
        #[arg(long)]
        no: PathBuf,
        /// Keep the configured Z inputs instead of nulling the offsets.
        #[arg(long)]
        skip_offsets: bool,
        #[arg(long, value_enum, default_value_t = CutArg::Geometric)]
        cut: CutArg,
    },
    /// Solve a DIMACS CNF formula through PARTITION queries.
    Sat {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = BackendArg::ExactDp)]
        backend: BackendArg,
    },
    /// Emit a SPICE netlist of the cascade.
    Netlist { instance: String },
    /// Generate random instances with verified labels.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long = "max", default_value_t = 30)]
        max_mag: u64,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CutArg {
    Geometric,
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    #[value(name = "exact-dp")]
    ExactDp,
    #[value(name = "exact-bf")]
    ExactBf,
    Analog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Yes,
    No,
}

/// Filter keys of a config file; unset keys fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterSettings {
    pub kind: Option<FilterKind>,
    pub cutoff_f0: Option<f64>,
    pub order: Option<usize>,
    pub per_stage_gain: Option<f64>,
    pub zero_phase: Option<bool>,
}

impl FilterSettings {
    /// Brick-wall unless told otherwise. A one-pole cascade without an
    /// explicit order becomes the compensating design.
    pub fn design(&self) -> FilterDesign {
        let f0 = self.cutoff_f0.unwrap_or(DEFAULT_CUTOFF_HZ);
        match self.kind.unwrap_or(FilterKind::Brickwall) {
            FilterKind::Brickwall => FilterSpec::brickwall(f0).into(),
            FilterKind::None => FilterSpec::none().into(),
            FilterKind::OnePoleCascade => match self.order {
                Some(order) => {
                    let mut spec = FilterSpec::one_pole(f0, order, self.per_stage_gain.unwrap_or(2.0));
                    if let Some(zp) = self.zero_phase {
                        spec.zero_phase = zp;
                    }
                    spec.into()
                }
                None => FilterDesign::Compensating { cutoff_f0: f0 },
            },
        }
    }

    fn to_kv(&self) -> String {
        let opt = |o: Option<String>| o.unwrap_or_else(|| "default".into());
        format!(
            "kind = {}\ncutoff_f0 = {}\norder = {}\nper_stage_gain = {}\nzero_phase = {}\n",
            opt(self.kind.map(|k| k.as_str().to_string())),
            opt(self.cutoff_f0.map(|v| format!("{v:?}"))),
            opt(self.order.map(|v| v.to_string())),
            opt(self.per_stage_gain.map(|v| format!("{v:?}"))),
            opt(self.zero_phase.map(|v| v.to_string())),
        )
    }
}

/// Parsed config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub nonideal: NonidealityConfig,
    pub filter: FilterSettings,
}

impl RunConfig {
    /// First 16 hex digits of the SHA-256 of the canonical listing.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(format!("{}{}", self.nonideal.to_kv(), self.filter.to_kv()).as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

/// Reads `key = value` lines; `#` starts a comment. Unknown keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: idx + 1, msg };
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let f = &mut cfg.filter;
        let bad = |_| err(format!("{key}: bad value `{value}`"));
        match key {
            "kind" => f.kind = Some(value.parse().map_err(|e: Error| err(e.to_string()))?),
            "cutoff_f0" => f.cutoff_f0 = Some(value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?),
            "order" => f.order = Some(value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
            "per_stage_gain" => {
                f.per_stage_gain = Some(value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?)
            }
            "zero_phase" => f.zero_phase = Some(value.parse().map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?),
            _ => {
                if !cfg.nonideal.set(key, value).map_err(|e| err(e.to_string()))? {
                    return Err(err(format!("unknown key `{key}`")));
                }
            }
        }
    }
    cfg.nonideal.validate()?;
    Ok(cfg)
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub wall_time: f64,
}

impl RunRecord {
    pub fn to_kv(&self) -> String {
        let outputs: Vec<String> = self.outputs.iter().map(|p| p.display().to_string()).collect();
        format!(
            "command = {}\nconfig_hash = {}\nseed = {}\noutputs = {}\nwall_time_s = {:.3}\n",
            self.command,
            self.config_hash,
            self.seed,
            outputs.join(","),
            self.wall_time
        )
    }
}

struct Ctx<'a> {
    global: &'a GlobalArgs,
    config: RunConfig,
    command: String,
    seed: u64,
    outputs: Vec<PathBuf>,
    stdout: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn provenance(&self, comment: &str) -> String {
        format!("{comment} command={} config_hash={} seed={}\n", self.command, self.config.hash(), self.seed)
    }

    /// Writes `body` under the output directory, or to stdout without one.
    fn emit(&mut self, name: &str, comment: &str, body: &str) -> Result<()> {
        let text = format!("{}{body}", self.provenance(comment));
        match &self.global.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let path = dir.join(name);
                fs::write(&path, text)?;
                self.outputs.push(path);
            }
            None => self.stdout.write_all(text.as_bytes())?,
        }
        Ok(())
    }

    fn say(&mut self, text: &str) -> Result<()> {
        self.stdout.write_all(text.as_bytes())?;
        Ok(())
    }

    fn nonideal(&self) -> NonidealityConfig {
        let mut cfg = match (self.global.oracle, &self.global.config) {
            (OracleKind::AnalogIdeal, None) => NonidealityConfig::ideal(),
            _ => self.config.nonideal.clone(),
        };
        cfg.seed = self.seed;
        cfg
    }

    fn design(&self) -> FilterDesign {
        let mut f = self.config.filter.clone();
        if let Some(kind) = self.global.filter {
            f.kind = Some(match kind {
                FilterArg::Brickwall => FilterKind::Brickwall,
                FilterArg::OnePole => FilterKind::OnePoleCascade,
                FilterArg::None => FilterKind::None,
            });
            if kind == FilterArg::OnePole {
                f.order = None;
            }
        }
        if let Some(f0) = self.global.f0 {
            f.cutoff_f0 = Some(f0);
        }
        f.design()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.global.jobs {
            b = b.num_threads(j.max(1));
        }
        b.build().map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Diagnostics go to stderr.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_NO };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let config = match &cli.global.config {
        Some(path) => parse_config(&read(path)?)?,
        None => RunConfig::default(),
    };
    let seed = cli.global.seed.unwrap_or(config.nonideal.seed);
    let command = match &cli.command {
        Command::Decide { .. } => "decide",
        Command::Spectrum { .. } => "spectrum",
        Command::Calibrate { .. } => "calibrate",
        Command::Sat { .. } => "sat",
        Command::Netlist { .. } => "netlist",
        Command::Gen { .. } => "gen",
    };
    let mut ctx = Ctx { global: &cli.global, config, command: command.into(), seed, outputs: Vec::new(), stdout };
    let code = match &cli.command {
        Command::Decide { instances, file, calibration, trace, spectrum } => {
            cmd_decide(&mut ctx, instances, file.as_deref(), calibration.as_deref(), *trace, *spectrum)?
        }
        Command::Spectrum { instance, simulate } => cmd_spectrum(&mut ctx, instance, *simulate)?,
        Command::Calibrate { yes, no, skip_offsets, cut } => cmd_calibrate(&mut ctx, yes, no, *skip_offsets, *cut)?,
        Command::Sat { file, backend } => cmd_sat(&mut ctx, file, *backend)?,
        Command::Netlist { instance } => cmd_netlist(&mut ctx, instance)?,
        Command::Gen { n, max_mag, kind, count } => cmd_gen(&mut ctx, *n, *max_mag, *kind, *count)?,
    };
    if let Some(dir) = &cli.global.out {
        let record = RunRecord {
            command: ctx.command.clone(),
            config_hash: ctx.config.hash(),
            seed: ctx.seed,
            outputs: ctx.outputs.clone(),
            wall_time: started.elapsed().as_secs_f64(),
        };
        fs::create_dir_all(dir)?;
        fs::write(dir.join("run_record.txt"), record.to_kv())?;
    }
    Ok(code)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Calibration file: threshold keys plus the compensated Z inputs.
fn load_calibration(path: &Path) -> Result<(DecisionThreshold, Option<Vec<f64>>)> {
    let text = read(path)?;
    let thr = DecisionThreshold::from_kv(&text)?;
    let mut z = None;
    for line in text.lines() {
        if let Some((k, v)) = line.split_once('=') {
            if k.trim() == "z_compensation" {
                let mut cfg = NonidealityConfig::default();
                cfg.set("z_compensation", v)?;
                z = Some(cfg.z_compensation);
            }
        }
    }
    Ok((thr, z))
}

fn cmd_decide(
    ctx: &mut Ctx,
    args: &[String],
    file: Option<&Path>,
    calibration: Option<&Path>,
    want_trace: bool,
    want_spectrum: bool,
) -> Result<i32> {
    let mut instances = args.iter().map(|s| parse_instance(s)).collect::<Result<Vec<_>>>()?;
    if let Some(path) = file {
        instances.extend(parse_instance_file(&read(path)?)?);
    }
    if instances.is_empty() {
        return Err(Error::InvalidParameter("no instances given".into()));
    }
    let oracle = ctx.global.oracle;
    let strict = ctx.global.strict;
    let mut cfg = ctx.nonideal();
    let design = ctx.design();
    let plan = SamplingPlan::default();
    let calib = calibration.map(load_calibration).transpose()?;
    if let Some((_, Some(z))) = &calib {
        cfg.z_compensation = z.clone();
    }

    type Row = (Option<crate::calibration::Decision>, bool, Option<crate::dsp::SampledTrace>);
    let run_one = |inst: &CpiInstance| -> Result<Row> {
        match oracle {
            OracleKind::ExactDp => Ok((None, decide_dp(inst)?, None)),
            OracleKind::ExactBf => Ok((None, decide_bruteforce(inst)?, None)),
            OracleKind::Analog | OracleKind::AnalogIdeal => {
                let thr = match &calib {
                    Some((thr, _)) => thr.clone(),
                    None => DecisionThreshold::nominal(nominal_yes_floor(inst, &cfg, &design.for_size(inst.len()))),
                };
                let d = decide_analog(inst, &cfg, &design, &plan, &thr, strict)?;
                let trace = if want_trace || want_spectrum {
                    Some(measure_dc(inst, &cfg, &design, &plan)?.trace)
                } else {
                    None
                };
                let yes = d.is_yes();
                Ok((Some(d), yes, trace))
            }
        }
    };
    let rows: Vec<Result<Row>> = ctx.pool()?.install(|| instances.par_iter().map(run_one).collect());

    let hash = ctx.config.hash();
    let mut any_yes = false;
    let mut record = String::new();
    for (k, (inst, row)) in instances.iter().zip(rows).enumerate() {
        let (decision, yes, trace) = row?;
        any_yes |= yes;
        match &decision {
            Some(d) => {
                if d.bandwidth_warning {
                    eprintln!("warning: `{inst}` has lines above the multiplier bandwidth");
                }
                record.push_str(&d.to_record(inst, &hash, ctx.seed));
            }
            None => {
                record.push_str(&format!("instance = {inst}\nanswer = {}\n", if yes { "YES" } else { "NO" }));
            }
        }
        record.push_str(&format!("oracle = {}\n\n", oracle_name(oracle)));
        if let Some(trace) = trace {
            if want_trace {
                ctx.emit(&format!("trace_{k}.csv"), "#", &trace.to_csv())?;
            }
            if want_spectrum {
                ctx.emit(&format!("spectrum_{k}.csv"), "#", &dft(&trace).to_csv())?;
            }
        }
    }
    if ctx.global.out.is_some() {
        ctx.emit("decisions.txt", "#", &record)?;
    }
    ctx.say(&record)?;
    Ok(if any_yes { EXIT_YES } else { EXIT_NO })
}

fn oracle_name(o: OracleKind) -> &'static str {
    match o {
        OracleKind::ExactDp => "exact-dp",
        OracleKind::ExactBf => "exact-bf",
        OracleKind::Analog => "analog",
        OracleKind::AnalogIdeal => "analog-ideal",
    }
}

fn cmd_spectrum(ctx: &mut Ctx, instance: &str, simulate: bool) -> Result<i32> {
    let inst = parse_instance(instance)?;
    ctx.emit("spectrum_analytic.csv", "#", &analytic_spectrum(&inst)?.to_csv())?;
    if simulate {
        let cfg = match ctx.global.config {
            Some(_) => ctx.nonideal(),
            None => NonidealityConfig { seed: ctx.seed, ..NonidealityConfig::ideal() },
        };
        let design = match ctx.global.filter {
            Some(_) => ctx.design(),
            None => FilterSpec::none().into(),
        };
        let m = measure_dc(&inst, &cfg, &design, &SamplingPlan::default())?;
        let measured = dft(&m.trace).rescaled(1.0 / cfg.f_base, FrequencyUnits::Instance);
        ctx.emit("spectrum_measured.csv", "#", &measured.to_csv())?;
    }
    Ok(EXIT_NO)
}

fn cmd_calibrate(ctx: &mut Ctx, yes: &Path, no: &Path, skip_offsets: bool, cut: CutArg) -> Result<i32> {
    let train_yes = parse_instance_file(&read(yes)?)?;
    let train_no = parse_instance_file(&read(no)?)?;
    let mut cfg = ctx.nonideal();
    let design = ctx.design();
    let plan = SamplingPlan::default();
    let mut body = String::new();
    if !skip_offsets {
        let probe = train_no
            .iter()
            .filter(|i| i.len() >= 2)
            .max_by_key(|i| i.len())
            .ok_or_else(|| Error::InvalidParameter("offset calibration needs a NO-instance with n >= 2".into()))?;
        let (compensated, report): (NonidealityConfig, OffsetReport) = calibrate_offsets(probe, &cfg, &plan)?;
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        body.push_str(&format!("offset_probe = {probe}\n"));
        body.push_str(&format!("measured_offsets = {}\n", list(&report.per_stage_dc)));
        body.push_str(&format!("z_compensation = {}\n", list(&compensated.z_compensation)));
        cfg = compensated;
    }
    let rule = match cut {
        CutArg::Geometric => CutRule::GeometricMean,
        CutArg::Midpoint => CutRule::Midpoint,
    };
    let thr = ctx.pool()?.install(|| bootstrap_threshold(&train_yes, &train_no, &cfg, &design, &plan, rule))?;
    body.push_str(&thr.to_kv());
    ctx.emit("calibration.txt", "#", &body)?;
    if !thr.separable {
        eprintln!("warning: training bands overlap (NO max {} >= YES min {})", thr.no_band_max, thr.yes_band_min);
    }
    Ok(EXIT_NO)
}

fn cmd_sat(ctx: &mut Ctx, file: &Path, backend: BackendArg) -> Result<i32> {
    let (formula, warnings) = parse_dimacs_with(&read(file)?, ctx.global.strict)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut oracle = match backend {
        BackendArg::ExactDp => OracleBackend::ExactDp,
        BackendArg::ExactBf => OracleBackend::ExactBruteForce,
        BackendArg::Analog => OracleBackend::AnalogSimulated(AnalogBackend::new(ctx.nonideal())),
    };
    let out = extract_witness(&formula, &mut oracle)?;
    let body = format!("c oracle_calls = {}\n{}", out.oracle_calls, out.to_dimacs());
    if ctx.global.out.is_some() {
        ctx.emit("solution.txt", "c", &body)?;
    }
    ctx.say(&body)?;
    Ok(if out.model.is_some() { EXIT_SAT } else { EXIT_UNSAT })
}

fn cmd_netlist(ctx: &mut Ctx, instance: &str) -> Result<i32> {
    let inst = parse_instance(instance)?;
    let spec = ctx.design().for_size(inst.len());
    let doc = emit_netlist(&inst, &ctx.nonideal(), &spec)?;
    let name = format!(
        "cascade_{}.cir",
        inst.values().iter().map(u64::to_string).collect::<Vec<_>>().join("_")
    );
    let text = doc.to_string();
    // The title must stay the first line of a netlist.
    let (title, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let body = format!("{}{rest}", ctx.provenance("*"));
    let full = format!("{title}\n{body}");
    match &ctx.global.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, full)?;
            ctx.outputs.push(path);
        }
        None => ctx.say(&full)?,
    }
    Ok(EXIT_NO)
}

/// Per-instance seed derived from the run seed.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cmd_gen(ctx: &mut Ctx, n: usize, max_mag: u64, kind: KindArg, count: usize) -> Result<i32> {
    let kind = match kind {
        KindArg::Yes => InstanceKind::Yes,
        KindArg::No => InstanceKind::No,
    };
    let seed = ctx.seed;
    let generated: Result<Vec<CpiInstance>> = ctx.pool()?.install(|| {
        (0..count as u64).into_par_iter().map(|k| random_instance(n, max_mag, kind, sub_seed(seed, k))).collect()
    });
    let label = if kind == InstanceKind::Yes { "yes" } else { "no" };
    ctx.emit(&format!("instances_{label}.txt"), "#", &write_instance_file(&generated?))?;
    Ok(EXIT_NO)
}
