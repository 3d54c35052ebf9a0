// SPDX-License-Identifier: Apache-2.0

//! Simulator of an analogue cosine-product oracle for PARTITION.
//!
//! `∫_0^{2π} ∏ cos(a_i t) dt` is non-zero exactly when the multiset `a` splits
//! into two halves of equal sum. The crate provides exact reference oracles,
//! a behavioural model of the multiplier chain, the low-pass and sampling
//! stage, offset calibration, the SAT to PARTITION reduction and a SPICE
//! netlist emitter.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analog_pipeline;
pub mod calibration;
pub mod cli;
pub mod dsp;
pub mod error;
pub mod exact_oracle;
pub mod instances;
pub mod netlist;
pub mod reductions;

pub use error::{Error, Result};
pub use instances::CpiInstance;
