//! Waveform and estimator analysis: PAPR, spectra, ambiguity and bounds.

pub mod ambiguity;
pub mod crb;
pub mod marcum;
pub mod papr;
pub mod psd;
