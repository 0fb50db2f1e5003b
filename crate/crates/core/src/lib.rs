//! Production forecasting for petroleum wells and fields from rate history.
//!
//! The crate covers the whole workflow: loading and conditioning per-well
//! rate series ([`dataset`]), reshaping them into lag-window supervised
//! sets ([`windowing`]), fitting linear and neural estimators
//! ([`estimators`]), step-by-step recursive forecasting with injection
//! schedules and walk-forward evaluation ([`forecaster`]), accuracy
//! metrics and the Arps decline baseline ([`metrics`], [`decline`]), and a
//! synthetic injection-driven field generator with a grid-search harness
//! ([`synth`], [`grid`]).

// `!(x >= 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod decline;
pub mod error;
pub mod estimators;
pub mod forecaster;
pub mod grid;
pub mod metrics;
pub mod synth;
pub mod windowing;

pub use error::{Error, Result};
