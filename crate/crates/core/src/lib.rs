//! Internal short-circuit detection for parallel-connected lithium-ion packs
//! from cell expansion force and vented CO₂.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod error;
pub mod gas_transport;
pub mod isc_dynamics;
pub mod mechanics;
pub mod pack_model;
pub mod scenario;
pub mod sensing;

pub use error::{Error, Result};
