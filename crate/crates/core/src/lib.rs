//! Temporal neuromorphic image encoder.
//!
//! Pixels become inter-spike intervals through a subthreshold current
//! converter feeding a set of integrate-and-fire branches with graded
//! membrane capacitors. The crate provides the closed-form model and its
//! inverse ([`model`]), an independent time-stepped simulation of the
//! branches ([`simulator`]), whole-image encode/decode ([`codec`]), a
//! per-neuron power table ([`power`]) and the file formats ([`io`]).

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
pub mod io;
pub mod model;
pub mod power;
pub mod simulator;

pub use codec::{
    decode_image, deviation_summary, encode_image, sweep_intervals, CodecError, DeviationReport, DeviationRow,
    DeviationSummary, EncodeMode, EncodedImage, ImageU8,
};
pub use model::{
    decode_pixel_from_interval, excitatory_current, integrating_time, interspike_interval_analytic,
    pixel_to_input_voltage, validate_params, Branch, BranchSet, DecodeTolerance, DeviceParams, ModelError, Pixel,
    ValidationReport,
};
pub use power::{power_of_pixel, PowerModel};
pub use simulator::{simulate_branch, simulate_pixel, SimConfig, SimError, SpikeEvent, SpikeTrain};
