//! Delay-Doppler chirp pilots superimposed on ODDM data: modem, channel,
//! sensing, detection and waveform analysis.

pub mod error;
pub mod params;
pub mod pulses;

pub use error::{Error, Result};
pub mod analysis;
pub mod channel;
pub mod chirp;
pub mod detection;
pub mod fft;
pub mod frame;
pub mod harness;
pub mod modem;
mod par;
pub mod rng;
pub mod sensing;
