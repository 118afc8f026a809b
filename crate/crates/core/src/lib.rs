//! Simulation and library for a visually servoed pan-tilt camera mount.
//!
//! The crate is organised bottom-up:
//!
//! * [`angle_map`] — pixel deviation → deviation angles → saturated PWM.
//! * [`servo`] — second-order servo plant with an internal PID loop (RK4).
//! * [`gain`] — adaptive intelligent coefficient, dead-band, IOU and the
//!   tracking-efficiency metric.
//! * [`recapture`] — lost-target state machine and sweep search.
//! * [`fusion`] — forward-only CFAM / multi-head self-attention kernels.
//! * [`sim`] — closed-loop scenario engine, synthetic detector, traces and
//!   metrics.
//!
//! Angles are in degrees everywhere except inside [`servo`], which works in
//! radians. Pulse widths are in microseconds.

pub mod angle_map;
mod error;
pub mod fusion;
pub mod gain;
pub mod recapture;
pub mod servo;
pub mod sim;

pub use error::{Error, Result};
