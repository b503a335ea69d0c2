//! Simulation of RIS beam tracking for a UWB-localized mobile receiver.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] builds the element layout of a tiled reflecting surface and
//!   converts polar scenario coordinates into the surface frame.
//! * [`channel`] evaluates the near-field cascaded Tx–RIS–Rx channel.
//! * [`optimizer`] derives binary (0/π) surface configurations analytically.
//! * [`beamsplit`] splits the surface into sub-surfaces steered around a
//!   position estimate and phase-matches the resulting beams.
//! * [`uwb`] simulates two-anchor ranging and the momentum correction filter.
//! * [`sim`] runs tracking and sweep scenarios and summarizes traces.

pub mod beamsplit;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod optimizer;
pub mod sim;
pub mod uwb;

pub use error::{Error, Result};
