//! Hardware-free simulator and calibration toolkit for a steerable pan/tilt
//! projector-camera rig.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod geometry;
pub mod rig;
pub mod scene;
pub mod upr;
pub mod warp;

pub use error::{Error, Result};
pub use exec::Exec;
