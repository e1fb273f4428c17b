//! Discrete-time simulator and per-slot optimizer for an aerial-reflector
//! downlink that schedules status updates to minimize weighted-sum age of
//! information.

pub mod aoi;
pub mod beamforming;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod sca;
pub mod selfcheck;
pub mod sim;

pub use error::{Error, Result};
