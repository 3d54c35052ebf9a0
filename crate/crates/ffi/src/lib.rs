// SPDX-License-Identifier: Apache-2.0

//! C ABI over `cpi_oracle`.
//!
//! Instances and configs are opaque heap handles released with their `_free`
//! functions. Every fallible call returns a [`CpiStatus`]; the message of the
//! last failure on the calling thread is available from
//! [`cpi_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cpi_oracle::calibration::{decide_analog, nominal_yes_floor, DecisionThreshold};
use cpi_oracle::cli::{parse_config, RunConfig};
use cpi_oracle::dsp::SamplingPlan;
use cpi_oracle::error::Error;
use cpi_oracle::exact_oracle;
use cpi_oracle::instances::{self, parse_instance};
use cpi_oracle::analog_pipeline::NonidealityConfig;
use cpi_oracle::reductions::{extract_witness, parse_dimacs, OracleBackend};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    BudgetExceeded = 4,
    BandwidthExceeded = 5,
    NotSeparable = 6,
    Overflow = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

/// Opaque PARTITION instance.
pub struct CpiInstance(instances::CpiInstance);

/// Opaque simulator configuration (nonidealities and filter settings).
pub struct CpiConfig(RunConfig);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpiDecision {
    pub yes: bool,
    pub dc_volts: f64,
    pub cut_volts: f64,
    pub bandwidth_warning: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CpiStatus {
    match e {
        Error::Parse { .. } | Error::InvalidToken(_) => CpiStatus::ParseError,
        Error::BudgetExceeded { .. } | Error::InstanceTooLarge { .. } => CpiStatus::BudgetExceeded,
        Error::BandwidthExceeded { .. } => CpiStatus::BandwidthExceeded,
        Error::NotSeparable { .. } => CpiStatus::NotSeparable,
        Error::SumOverflow | Error::MagnitudeOverflow { .. } => CpiStatus::Overflow,
        _ => CpiStatus::InvalidArgument,
    }
}

fn fail(status: CpiStatus, msg: impl Into<String>) -> CpiStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to a status.
fn guarded(f: impl FnOnce() -> Result<(), CpiStatus>) -> CpiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpiStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(CpiStatus::Internal, "internal panic"),
    }
}

fn lift<T>(r: cpi_oracle::Result<T>) -> Result<T, CpiStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, CpiStatus> {
    if p.is_null() {
        return Err(fail(CpiStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(CpiStatus::InvalidArgument, "string is not UTF-8"))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, CpiStatus> {
    p.as_mut().ok_or_else(|| fail(CpiStatus::NullPointer, "null output pointer"))
}

unsafe fn inst_arg<'a>(p: *const CpiInstance) -> Result<&'a instances::CpiInstance, CpiStatus> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| fail(CpiStatus::NullPointer, "null instance handle"))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cpi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cpi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses whitespace- or comma-separated integers into a new instance.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cpi_instance_parse(text: *const c_char, out: *mut *mut CpiInstance) -> CpiStatus {
    guarded(|| {
        let out = out_arg(out)?;
        let inst = lift(parse_instance(str_arg(text)?))?;
        *out = Box::into_raw(Box::new(CpiInstance(inst)));
        Ok(())
    })
}

/// Builds an instance from `len` positive values.
///
/// # Safety
/// `values` must point to `len` readable `uint64_t` and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpi_instance_from_values(
    values: *const u64,
    len: usize,
    out: *mut *mut CpiInstance,
) -> CpiStatus {
    guarded(|| {
        let out = out_arg(out)?;
        if values.is_null() && len > 0 {
            return Err(fail(CpiStatus::NullPointer, "null values"));
        }
        let slice = if len == 0 { &[][..] } else { std::slice::from_raw_parts(values, len) };
        let inst = lift(instances::CpiInstance::new(slice.to_vec()))?;
        *out = Box::into_raw(Box::new(CpiInstance(inst)));
        Ok(())
    })
}

/// # Safety
/// `inst` must be NULL or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn cpi_instance_free(inst: *mut CpiInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of values, 0 for NULL.
///
/// # Safety
/// `inst` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpi_instance_len(inst: *const CpiInstance) -> usize {
    inst.as_ref().map_or(0, |h| h.0.len())
}

/// Copies the values into `buf`. Fails with `BUFFER_TOO_SMALL` when `cap`
/// is less than the instance length.
///
/// # Safety
/// `inst` must be live and `buf` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn cpi_instance_values(inst: *const CpiInstance, buf: *mut u64, cap: usize) -> CpiStatus {
    guarded(|| {
        let vals = inst_arg(inst)?.values();
        if cap < vals.len() {
            return Err(fail(CpiStatus::BufferTooSmall, format!("need {} slots", vals.len())));
        }
        if buf.is_null() {
            return Err(fail(CpiStatus::NullPointer, "null buffer"));
        }
        ptr::copy_nonoverlapping(vals.as_ptr(), buf, vals.len());
        Ok(())
    })
}

/// Exact PARTITION decision by dynamic programming.
///
/// # Safety
/// `inst` must be live and `yes` writable.
#[no_mangle]
pub unsafe extern "C" fn cpi_decide_dp(inst: *const CpiInstance, yes: *mut bool) -> CpiStatus {
    guarded(|| {
        let inst = inst_arg(inst)?;
        *out_arg(yes)? = lift(exact_oracle::decide_dp(inst))?;
        Ok(())
    })
}

/// Fraction of balanced sign vectors: the DC of the ideal product.
///
/// # Safety
/// `inst` must be live and `dc` writable.
#[no_mangle]
pub unsafe extern "C" fn cpi_ideal_dc(inst: *const CpiInstance, dc: *mut f64) -> CpiStatus {
    guarded(|| {
        let inst = inst_arg(inst)?;
        *out_arg(dc)? = lift(exact_oracle::ideal_dc(inst))?;
        Ok(())
    })
}

/// Finds one side of a balanced split. On success `*found` tells whether one
/// exists and `*count` indices (0-based, ascending) are written to `indices`.
///
/// # Safety
/// `inst` must be live, `indices` must have room for `cap` entries and
/// `count`/`found` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpi_find_partition(
    inst: *const CpiInstance,
    indices: *mut usize,
    cap: usize,
    count: *mut usize,
    found: *mut bool,
) -> CpiStatus {
    guarded(|| {
        let inst = inst_arg(inst)?;
        let count = out_arg(count)?;
        let found = out_arg(found)?;
        *count = 0;
        *found = false;
        if let Some(w) = lift(exact_oracle::find_partition(inst))? {
            if cap < w.subset.len() {
                return Err(fail(CpiStatus::BufferTooSmall, format!("need {} slots", w.subset.len())));
            }
            if indices.is_null() && !w.subset.is_empty() {
                return Err(fail(CpiStatus::NullPointer, "null index buffer"));
            }
            ptr::copy_nonoverlapping(w.subset.as_ptr(), indices, w.subset.len());
            *count = w.subset.len();
            *found = true;
        }
        Ok(())
    })
}

/// Default (nonideal) configuration with a brick-wall filter.
#[no_mangle]
pub extern "C" fn cpi_config_default() -> *mut CpiConfig {
    Box::into_raw(Box::new(CpiConfig(RunConfig::default())))
}

/// Noise- and offset-free configuration without a bandwidth limit.
#[no_mangle]
pub extern "C" fn cpi_config_ideal() -> *mut CpiConfig {
    let cfg = RunConfig { nonideal: NonidealityConfig::ideal(), ..RunConfig::default() };
    Box::into_raw(Box::new(CpiConfig(cfg)))
}

/// Parses a flat `key = value` config text.
///
/// # Safety
/// `text` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpi_config_parse(text: *const c_char, out: *mut *mut CpiConfig) -> CpiStatus {
    guarded(|| {
        let out = out_arg(out)?;
        let cfg = lift(parse_config(str_arg(text)?))?;
        *out = Box::into_raw(Box::new(CpiConfig(cfg)));
        Ok(())
    })
}

/// Sets one nonideality field, e.g. `("mult_output_offset", "0.004,0.004")`.
///
/// # Safety
/// `cfg` must be live; `key` and `value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cpi_config_set(cfg: *mut CpiConfig, key: *const c_char, value: *const c_char) -> CpiStatus {
    guarded(|| {
        let cfg = cfg.as_mut().ok_or_else(|| fail(CpiStatus::NullPointer, "null config handle"))?;
        let (key, value) = (str_arg(key)?, str_arg(value)?);
        let mut next = cfg.0.nonideal.clone();
        if !lift(next.set(key, value))? {
            return Err(fail(CpiStatus::InvalidArgument, format!("unknown key `{key}`")));
        }
        lift(next.validate())?;
        cfg.0.nonideal = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpi_config_free(cfg: *mut CpiConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Simulates the analogue oracle on `inst`. A NaN `cut_volts` uses half of
/// the smallest YES-level reachable through `cfg`.
///
/// # Safety
/// `inst` and `cfg` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpi_decide_analog(
    inst: *const CpiInstance,
    cfg: *const CpiConfig,
    cut_volts: f64,
    out: *mut CpiDecision,
) -> CpiStatus {
    guarded(|| {
        let inst = inst_arg(inst)?;
        let cfg = cfg.as_ref().ok_or_else(|| fail(CpiStatus::NullPointer, "null config handle"))?;
        let out = out_arg(out)?;
        let design = cfg.0.filter.design();
        let thr = if cut_volts.is_nan() {
            DecisionThreshold::nominal(nominal_yes_floor(inst, &cfg.0.nonideal, &design.for_size(inst.len())))
        } else {
            DecisionThreshold::nominal(2.0 * cut_volts)
        };
        let d = lift(decide_analog(inst, &cfg.0.nonideal, &design, &SamplingPlan::default(), &thr, false))?;
        *out = CpiDecision {
            yes: d.is_yes(),
            dc_volts: d.dc_measured,
            cut_volts: d.threshold.cut,
            bandwidth_warning: d.bandwidth_warning,
        };
        Ok(())
    })
}

/// Solves a DIMACS CNF formula with the exact PARTITION oracle. On success
/// `*satisfiable` is set and, when true, `*num_vars` signed literals
/// (`+v` true, `-v` false) are written to `model`.
///
/// # Safety
/// `dimacs` must be NUL-terminated, `model` must have room for `cap`
/// entries and `num_vars`/`satisfiable` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpi_sat_solve(
    dimacs: *const c_char,
    model: *mut i32,
    cap: usize,
    num_vars: *mut usize,
    satisfiable: *mut bool,
) -> CpiStatus {
    guarded(|| {
        let formula = lift(parse_dimacs(str_arg(dimacs)?))?;
        let num_vars = out_arg(num_vars)?;
        let satisfiable = out_arg(satisfiable)?;
        *num_vars = formula.num_vars;
        *satisfiable = false;
        let outcome = lift(extract_witness(&formula, &mut OracleBackend::ExactDp))?;
        if let Some(a) = outcome.model {
            if cap < a.values.len() {
                return Err(fail(CpiStatus::BufferTooSmall, format!("need {} slots", a.values.len())));
            }
            if model.is_null() && !a.values.is_empty() {
                return Err(fail(CpiStatus::NullPointer, "null model buffer"));
            }
            for (i, &v) in a.values.iter().enumerate() {
                let lit = i as i32 + 1;
                *model.add(i) = if v { lit } else { -lit };
            }
            *satisfiable = true;
        }
        Ok(())
    })
}
