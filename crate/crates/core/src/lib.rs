//! Reduced dynamics, Filippov simulation and two-fold singularity analysis for a
//! wheel rolling on a turntable with a stretched-string tyre contact.
//!
//! The state is `(r, v, omega)`: slider displacement, slider speed and top-disc
//! angular speed, in rescaled time. The switching surface is `h = 0`, where `h`
//! is the lateral relative velocity at the wheel contact.

// `!(x <= y)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brent;
pub mod ensemble;
pub mod error;
pub mod filippov;
pub mod model;
pub mod params;
pub mod rk;
pub mod scan;
pub mod singularity;
pub mod tyre;

pub use error::{Error, Result};
pub use params::{BaseParams, State, SystemParams};
