//! Analytic and simulated power spectral densities.
//!
//! PSD values are energy spectral densities divided by `MN`, i.e. energy per
//! symbol period per hertz. With that normalization a frame with time-domain
//! powers `E_c + E_s` integrates to `E_c + E_s`.

use crate::chirp::Pilot;
use crate::error::{invalid, Result};
use crate::fft;
use crate::frame::data_symbol_energy;
use crate::modem::Waveform;
use crate::params::{PowerAllocation, SystemParams};
use crate::pulses::{dirichlet, PulseBank};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdValue {
    pub pilot: f64,
    pub data: f64,
    pub total: f64,
}

/// Closed-form PSD of a pilot on the zero-Doppler column plus i.i.d. data on
/// the remaining columns.
#[derive(Debug, Clone)]
pub struct PsdModel {
    m: usize,
    n: usize,
    dt: f64,
    pulses: PulseBank,
    pilot_col: Vec<Complex64>,
    /// Mean data symbol energy.
    eps: f64,
}

impl PsdModel {
    pub fn new(p: &SystemParams, pilot: &Pilot, e_s: f64) -> Result<Self> {
        if !(e_s.is_finite() && e_s >= 0.0) {
            return invalid("data power must be finite and >= 0");
        }
        Ok(PsdModel {
            m: p.m(),
            n: p.n(),
            dt: p.delay_resolution(),
            pulses: PulseBank::from_params(p),
            pilot_col: pilot.frame.column(0).to_vec(),
            eps: data_symbol_energy(e_s, p.n()),
        })
    }

    pub fn eval(&self, f: f64) -> PsdValue {
        let a2 = self.pulses.srrc_spectrum_sq(f);
        if a2 == 0.0 {
            return PsdValue {
                pilot: 0.0,
                data: 0.0,
                total: 0.0,
            };
        }
        let nf = self.n as f64;
        let x = nf * self.m as f64 * self.dt * f; // N T f
        let tone0 = dirichlet(-x, self.n).norm_sqr();
        let seq: Complex64 = self
            .pilot_col
            .iter()
            .enumerate()
            .map(|(m, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * f * m as f64 * self.dt))
            .sum();
        let mn = (self.m * self.n) as f64;
        let pilot = nf * a2 * tone0 * seq.norm_sqr() / mn;
        let others: f64 = (1..self.n)
            .map(|k| dirichlet(k as f64 - x, self.n).norm_sqr())
            .sum();
        let data = self.eps * a2 * others;
        PsdValue {
            pilot,
            data,
            total: pilot + data,
        }
    }

    /// Occupied band edge `(1 + beta) / (2 dt)`.
    pub fn band_edge(&self) -> f64 {
        (1.0 + self.pulses.beta) / (2.0 * self.dt)
    }

    /// Trapezoid integral of the total PSD over the occupied band.
    pub fn integrate(&self, points: usize) -> f64 {
        let b = self.band_edge();
        let h = 2.0 * b / points as f64;
        (0..=points)
            .map(|i| {
                let w = if i == 0 || i == points { 0.5 } else { 1.0 };
                w * self.eval(-b + i as f64 * h).total
            })
            .sum::<f64>()
            * h
    }
}

/// Analytic PSD for a DD-SRN-FMCW pilot at the given allocation.
pub fn psd_analytic(f: f64, p: &SystemParams, alloc: &PowerAllocation) -> Result<PsdValue> {
    let pilot = crate::chirp::build_pilot_frame(p, crate::chirp::PilotKind::DdSrnFmcw, alloc.e_c)?;
    Ok(PsdModel::new(p, &pilot, alloc.e_s)?.eval(f))
}

/// `|S(f)|^2 / mn` at one frequency by direct summation.
pub fn spectrum_at(w: &Waveform, f: f64, mn: usize) -> f64 {
    let ts = 1.0 / w.sample_rate;
    let s: Complex64 = w
        .samples
        .iter()
        .enumerate()
        .map(|(i, &z)| z * Complex64::from_polar(1.0, -2.0 * PI * f * (i as f64 * ts)))
        .sum();
    (s * ts).norm_sqr() / mn as f64
}

/// Averaged periodogram on an FFT grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    pub sample_rate: f64,
    pub nfft: usize,
    /// Frequencies in `[-fs/2, fs/2)`, ascending.
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    power_sq: Vec<f64>,
    pub frames: usize,
    mn: usize,
}

impl Periodogram {
    /// Accumulator for frames sampled at `sample_rate`, each with `mn` symbols.
    pub fn new(sample_rate: f64, nfft: usize, mn: usize) -> Result<Self> {
        if nfft == 0 || mn == 0 {
            return invalid("periodogram needs nfft > 0 and mn > 0");
        }
        let freqs = (0..nfft)
            .map(|k| (k as f64 - (nfft / 2) as f64) * sample_rate / nfft as f64)
            .collect();
        Ok(Periodogram {
            sample_rate,
            nfft,
            freqs,
            power: vec![0.0; nfft],
            power_sq: vec![0.0; nfft],
            frames: 0,
            mn,
        })
    }

    /// Add one frame; the zero-padded FFT gives `|S(f)|^2` on the grid.
    pub fn push(&mut self, w: &Waveform) -> Result<()> {
        if (w.sample_rate - self.sample_rate).abs() > 1e-9 * self.sample_rate {
            return invalid("sample rate mismatch");
        }
        if w.samples.len() > self.nfft {
            return invalid(format!(
                "frame of {} samples exceeds nfft {}",
                w.samples.len(),
                self.nfft
            ));
        }
        let mut buf = w.samples.clone();
        buf.resize(self.nfft, Complex64::new(0.0, 0.0));
        fft::forward(&mut buf);
        let ts = 1.0 / self.sample_rate;
        let half = self.nfft / 2;
        for (i, (v, v2)) in self
            .power
            .iter_mut()
            .zip(self.power_sq.iter_mut())
            .enumerate()
        {
            let k = (i + self.nfft - half) % self.nfft;
            let x = buf[k].norm_sqr() * ts * ts / self.mn as f64;
            *v += x;
            *v2 += x * x;
        }
        self.frames += 1;
        Ok(())
    }

    /// Mean over pushed frames.
    pub fn mean(&self) -> Vec<f64> {
        let d = self.frames.max(1) as f64;
        self.power.iter().map(|v| v / d).collect()
    }

    /// Standard error of the mean per bin (zero with fewer than two frames).
    pub fn stderr(&self) -> Vec<f64> {
        let k = self.frames as f64;
        if self.frames < 2 {
            return vec![0.0; self.nfft];
        }
        self.power
            .iter()
            .zip(&self.power_sq)
            .map(|(s, s2)| {
                let var = ((s2 - s * s / k) / (k - 1.0)).max(0.0);
                (var / k).sqrt()
            })
            .collect()
    }
}

/// Unit-amplitude-per-symbol linear FMCW train of `n` chirps, swept over
/// `[-M/(2T), M/(2T))`, sampled at `o` samples per delay bin and scaled to the
/// energy of a unit-power ODDM frame.
pub fn linear_fmcw_waveform(m: usize, n: usize, t: f64, o: usize) -> Waveform {
    let dt = t / m as f64;
    let fs = o as f64 / dt;
    let eps = m as f64 / (t * t);
    let f0 = -(m as f64) / (2.0 * t);
    let per = m * o;
    let amp = 1.0 / dt.sqrt();
    let chirp: Vec<Complex64> = (0..per)
        .map(|i| {
            let tt = i as f64 / fs;
            Complex64::from_polar(amp, 2.0 * PI * (f0 * tt + 0.5 * eps * tt * tt))
        })
        .collect();
    let samples = (0..n).flat_map(|_| chirp.iter().copied()).collect();
    Waveform {
        sample_rate: fs,
        t0: 0.0,
        oversampling: o,
        with_cp: false,
        samples,
    }
}
