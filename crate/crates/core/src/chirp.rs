//! Discrete chirps, zero-autocorrelation checks and pilot frames.

use crate::error::{invalid, Result};
use crate::params::{DdFrame, FrameRole, SystemParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `c[m] = exp(j pi m^2 / M)` for even `M`.
pub fn make_chirp(m: usize) -> Result<Vec<Complex64>> {
    if m == 0 || m % 2 != 0 {
        return invalid(format!("chirp length must be even and positive, got {m}"));
    }
    let two_m = 2 * m as u64;
    Ok((0..m as u64)
        .map(|i| {
            let r = (i * i) % two_m;
            Complex64::from_polar(1.0, PI * r as f64 / m as f64)
        })
        .collect())
}

/// `sum_m x[m] conj(x[(m + zeta) mod M])`.
pub fn cyclic_autocorr(x: &[Complex64], zeta: i64) -> Complex64 {
    let m = x.len() as i64;
    (0..m)
        .map(|i| x[i as usize] * x[(i + zeta).rem_euclid(m) as usize].conj())
        .sum()
}

/// Continuous-chirp parameters sampled at `M` points per chirp period `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpParams {
    pub f_c: f64,
    pub epsilon: f64,
    pub t: f64,
    pub m: usize,
}

impl ChirpParams {
    /// Baseband sweep over `M / T` hertz starting at `f_c`.
    pub fn full_band(f_c: f64, t: f64, m: usize) -> Self {
        ChirpParams {
            f_c,
            epsilon: m as f64 / (t * t),
            t,
            m,
        }
    }

    /// `exp(j 2 pi (f_c T m / M + eps T^2 m^2 / (2 M^2)))`.
    pub fn sample(&self, i: i64) -> Complex64 {
        let mf = self.m as f64;
        let fct = self.f_c * self.t;
        let rate = self.epsilon * self.t * self.t;
        let i = i as f64;
        let ph = fct * i / mf + rate * i * i / (2.0 * mf * mf);
        Complex64::from_polar(1.0, 2.0 * PI * ph.fract())
    }
}

/// Integer form of the chirp conditions, avoiding floating-point rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactChirp {
    /// `eps T^2 / M`.
    pub rate_index: i64,
    /// `2 f_c T`.
    pub twice_carrier_cycles: i64,
    pub m: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZcaCondition {
    RateIntegral,
    RateCoprime,
    PhaseIntegral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZcaReport {
    pub holds: bool,
    pub failed: Vec<ZcaCondition>,
}

fn near_int(x: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        Some(r as i64)
    } else {
        None
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Check the three conditions under which the sampled chirp has zero cyclic
/// autocorrelation at every nonzero lag.
pub fn check_zca_conditions(p: &ChirpParams) -> ZcaReport {
    let mut failed = Vec::new();
    let mf = p.m as f64;
    let rate = p.epsilon * p.t * p.t / mf;
    match near_int(rate) {
        Some(r) => {
            if gcd(r, p.m as i64) != 1 {
                failed.push(ZcaCondition::RateCoprime);
            }
        }
        None => failed.push(ZcaCondition::RateIntegral),
    }
    if near_int(p.f_c * p.t + p.epsilon * p.t * p.t / 2.0).is_none() {
        failed.push(ZcaCondition::PhaseIntegral);
    }
    ZcaReport {
        holds: failed.is_empty(),
        failed,
    }
}

/// Exact-integer variant of [`check_zca_conditions`].
pub fn check_zca_conditions_exact(p: &ExactChirp) -> ZcaReport {
    let mut failed = Vec::new();
    if gcd(p.rate_index, p.m as i64) != 1 {
        failed.push(ZcaCondition::RateCoprime);
    }
    // f_c T + rate M / 2 integral  <=>  2 f_c T + rate M even
    if (p.twice_carrier_cycles + p.rate_index * p.m as i64).rem_euclid(2) != 0 {
        failed.push(ZcaCondition::PhaseIntegral);
    }
    ZcaReport {
        holds: failed.is_empty(),
        failed,
    }
}

/// Cyclic autocorrelation of the sampled continuous chirp at lag `zeta`.
pub fn linear_autocorr(p: &ChirpParams, zeta: i64) -> Complex64 {
    let seq: Vec<Complex64> = (0..p.m as i64).map(|i| p.sample(i)).collect();
    cyclic_autocorr(&seq, zeta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotKind {
    /// Chirp on the zero-Doppler column.
    DdSrnFmcw,
    /// Single delay-Doppler impulse.
    Ddip,
}

impl PilotKind {
    pub fn name(&self) -> &'static str {
        match self {
            PilotKind::DdSrnFmcw => "dd_srn_fmcw",
            PilotKind::Ddip => "ddip",
        }
    }
}

/// A pilot frame plus the delay sequence used to compress received frames.
#[derive(Debug, Clone)]
pub struct Pilot {
    pub kind: PilotKind,
    pub frame: DdFrame,
    /// Unit-modulus (chirp) or unit-impulse reference on the zero-Doppler column.
    pub reference: Vec<Complex64>,
    pub e_c: f64,
}

/// Delay bin of the impulse pilot.
pub fn ddip_position(p: &SystemParams) -> usize {
    p.l_max()
}

/// Build a pilot with per-sample time-domain power `e_c`.
pub fn build_pilot_frame(p: &SystemParams, kind: PilotKind, e_c: f64) -> Result<Pilot> {
    if !(e_c.is_finite() && e_c >= 0.0) {
        return invalid("pilot power must be finite and >= 0");
    }
    let (m, n) = (p.m(), p.n());
    let mut frame = DdFrame::zeros(m, n, FrameRole::Pilot);
    let reference = match kind {
        PilotKind::DdSrnFmcw => {
            let c = make_chirp(m)?;
            let a = (n as f64 * e_c).sqrt();
            for (i, ci) in c.iter().enumerate() {
                frame.set(i, 0, ci * a);
            }
            c
        }
        PilotKind::Ddip => {
            let pos = ddip_position(p);
            frame.set(
                pos,
                0,
                Complex64::new((m as f64 * n as f64 * e_c).sqrt(), 0.0),
            );
            let mut r = vec![Complex64::new(0.0, 0.0); m];
            r[pos] = Complex64::new(1.0, 0.0);
            r
        }
    };
    Ok(Pilot {
        kind,
        frame,
        reference,
        e_c,
    })
}
