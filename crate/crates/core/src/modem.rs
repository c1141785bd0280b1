//! ODDM modulation, pulse-shaped waveform synthesis and matched filtering.

use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::params::{DdFrame, FrameRole, SystemParams};
use crate::pulses::PulseBank;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Delay-Doppler grid to time-domain symbol vector (`s = vec(X F_N^H)`).
pub fn oddm_modulate(x: &DdFrame) -> Vec<Complex64> {
    let (m, n) = (x.m(), x.n());
    let scale = 1.0 / (n as f64).sqrt();
    let mut s = vec![Complex64::new(0.0, 0.0); m * n];
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    for mi in 0..m {
        for (ni, r) in row.iter_mut().enumerate() {
            *r = x.get(mi, ni);
        }
        fft::inverse(&mut row);
        for (ni, r) in row.iter().enumerate() {
            s[ni * m + mi] = r * scale;
        }
    }
    s
}

/// Time-domain samples back to the delay-Doppler grid (`Y = Y^DT F_N`).
pub fn oddm_demodulate(r: &[Complex64], m: usize, n: usize) -> Result<DdFrame> {
    if r.len() != m * n {
        return Err(Error::Shape(format!(
            "expected {} samples, got {}",
            m * n,
            r.len()
        )));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut y = DdFrame::zeros(m, n, FrameRole::Received);
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    for mi in 0..m {
        for (ni, v) in row.iter_mut().enumerate() {
            *v = r[ni * m + mi];
        }
        fft::forward(&mut row);
        for (ni, v) in row.iter().enumerate() {
            y.set(mi, ni, v * scale);
        }
    }
    Ok(y)
}

/// Oversampled complex baseband waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub sample_rate: f64,
    /// Time of `samples[0]` relative to the start of the frame body.
    pub t0: f64,
    pub oversampling: usize,
    pub with_cp: bool,
    pub samples: Vec<Complex64>,
}

impl Waveform {
    /// Index of the first sample at or after the frame body start.
    pub fn body_start(&self) -> usize {
        (-self.t0 * self.sample_rate).round().max(0.0) as usize
    }

    /// Samples spanning the `len` symbol periods of the frame body.
    pub fn body(&self, symbols: usize) -> Result<&[Complex64]> {
        let a = self.body_start();
        let b = a + symbols * self.oversampling;
        if b > self.samples.len() {
            return Err(Error::InsufficientLength(format!(
                "body needs {b} samples, have {}",
                self.samples.len()
            )));
        }
        Ok(&self.samples[a..b])
    }
}

/// Symbol-index range and values after optional cyclic extension.
///
/// With `with_cp`, the last `l_max` symbols are prepended and the first `Q`
/// appended, so every matched-filter window of the body sees a cyclic signal.
pub fn extend_symbols(s: &[Complex64], p: &SystemParams, with_cp: bool) -> (i64, Vec<Complex64>) {
    if !with_cp {
        return (0, s.to_vec());
    }
    let mn = s.len();
    let cp = p.l_max();
    let tail = p.q();
    let mut out = Vec::with_capacity(mn + cp + tail);
    for j in 0..cp + mn + tail {
        let idx = (j as i64 - cp as i64).rem_euclid(mn as i64) as usize;
        out.push(s[idx]);
    }
    (-(cp as i64), out)
}

/// Default SRRC truncation half-width in symbols.
pub fn pulse_span(p: &SystemParams) -> usize {
    8 * p.q()
}

/// Superpose shifted SRRC pulses on a grid of `O` samples per symbol.
///
/// Each pulse is truncated at `span` symbols either side of its centre.
pub fn synthesize_waveform(
    s: &[Complex64],
    p: &SystemParams,
    pulses: &PulseBank,
    with_cp: bool,
    span: usize,
) -> Result<Waveform> {
    if s.len() != p.frame_len() {
        return Err(Error::Shape(format!(
            "expected {} symbols, got {}",
            p.frame_len(),
            s.len()
        )));
    }
    let (j0, ext) = extend_symbols(s, p, with_cp);
    Ok(synth_ext(&ext, j0, 0.0, p.o(), pulses, span, with_cp))
}

/// [`synth_ext`] with room for `extra` trailing symbol periods of delay.
pub(crate) fn synth_ext_len(
    ext: &[Complex64],
    j0: i64,
    shift: f64,
    o: usize,
    pulses: &PulseBank,
    span: usize,
    extra: usize,
) -> Waveform {
    let mut padded = ext.to_vec();
    padded.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(extra));
    synth_ext(&padded, j0, shift, o, pulses, span, true)
}

/// Waveform for symbols `ext[i]` placed at `(j0 + i) dt + shift`.
pub(crate) fn synth_ext(
    ext: &[Complex64],
    j0: i64,
    shift: f64,
    o: usize,
    pulses: &PulseBank,
    span: usize,
    with_cp: bool,
) -> Waveform {
    let dt = pulses.dt;
    let of = o as f64;
    let start = (j0 - span as i64) * o as i64;
    let count = (ext.len() + 2 * span) * o + 1;
    let half = (span * o) as i64;
    // taps[k] = a((k - half) dt / O - frac) for the sub-sample shift
    let sub = shift / dt * of;
    let whole = sub.floor() as i64;
    let frac = (sub - whole as f64) / of;
    let taps: Vec<f64> = (0..=2 * half)
        .map(|k| pulses.srrc(((k - half) as f64 / of - frac) * dt))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); count];
    for (i, &sym) in ext.iter().enumerate() {
        if sym == Complex64::new(0.0, 0.0) {
            continue;
        }
        let centre = (j0 + i as i64) * o as i64 + whole - start;
        for (k, &a) in taps.iter().enumerate() {
            let idx = centre + k as i64 - half;
            if idx >= 0 && (idx as usize) < count {
                out[idx as usize] += sym * a;
            }
        }
    }
    Waveform {
        sample_rate: of / dt,
        t0: start as f64 * dt / of,
        oversampling: o,
        with_cp,
        samples: out,
    }
}

/// One period of the infinitely repeated frame, sampled `O` times per symbol.
///
/// Built in the frequency domain from the exact SRRC spectrum, so no pulse
/// truncation occurs. Requires `O >= 2`.
pub fn synthesize_periodic(
    s: &[Complex64],
    o: usize,
    pulses: &PulseBank,
) -> Result<Vec<Complex64>> {
    if o < 2 {
        return invalid("periodic synthesis needs O >= 2");
    }
    let mn = s.len();
    let mut spec = s.to_vec();
    fft::forward(&mut spec);
    let len = mn * o;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let dt = pulses.dt;
    let kmax = ((1.0 + pulses.beta) * mn as f64 / 2.0).ceil() as i64;
    let scale = 1.0 / (mn as f64 * dt);
    for k in -kmax..=kmax {
        let f = k as f64 / (mn as f64 * dt);
        let a = pulses.srrc_spectrum_sq(f).sqrt();
        if a == 0.0 {
            continue;
        }
        let sk = spec[k.rem_euclid(mn as i64) as usize];
        buf[k.rem_euclid(len as i64) as usize] += sk * a * scale;
    }
    fft::inverse(&mut buf);
    Ok(buf)
}

/// Matched-filter output sampled at symbol instants `q dt`, `q = 0..MN`.
pub fn matched_filter_sample(
    w: &Waveform,
    p: &SystemParams,
    pulses: &PulseBank,
    span: usize,
) -> Result<Vec<Complex64>> {
    let mn = p.frame_len();
    let o = w.oversampling;
    let dt = pulses.dt;
    let of = o as f64;
    let pos0 = -w.t0 * w.sample_rate;
    let base = pos0.round();
    if (pos0 - base).abs() > 1e-6 {
        return invalid("waveform grid is not aligned to symbol instants");
    }
    let base = base as i64;
    let half = (span * o) as i64;
    if base - half < 0 || base + (mn as i64 - 1) * o as i64 + half >= w.samples.len() as i64 {
        return Err(Error::InsufficientLength(format!(
            "matched filter needs samples [{}, {}], have {}",
            base - half,
            base + (mn as i64 - 1) * o as i64 + half,
            w.samples.len()
        )));
    }
    let taps: Vec<f64> = (-half..=half)
        .map(|k| pulses.srrc(k as f64 / of * dt) * dt / of)
        .collect();
    Ok((0..mn as i64)
        .map(|q| {
            let c = base + q * o as i64;
            taps.iter()
                .enumerate()
                .map(|(k, &a)| w.samples[(c + k as i64 - half) as usize] * a)
                .sum()
        })
        .collect())
}

/// Sidecar metadata written next to a binary waveform dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformMeta {
    pub schema: u32,
    pub format: String,
    pub sample_rate_hz: f64,
    pub num_samples: usize,
    pub start_offset_s: f64,
    pub oversampling: usize,
    pub with_cp: bool,
    pub params_hash: String,
}

/// Write interleaved little-endian `f32` I/Q to `path` and JSON metadata to `path.json`.
pub fn export_waveform(w: &Waveform, p: &SystemParams, path: &Path) -> Result<WaveformMeta> {
    let mut bytes = Vec::with_capacity(w.samples.len() * 8);
    for z in &w.samples {
        bytes.extend_from_slice(&(z.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    let meta = WaveformMeta {
        schema: 1,
        format: "cf32le".into(),
        sample_rate_hz: w.sample_rate,
        num_samples: w.samples.len(),
        start_offset_s: w.t0,
        oversampling: w.oversampling,
        with_cp: w.with_cp,
        params_hash: p.hash(),
    };
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    std::fs::write(side, serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

/// Read a waveform written by [`export_waveform`].
pub fn import_waveform(path: &Path) -> Result<Waveform> {
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    let meta: WaveformMeta = serde_json::from_str(&std::fs::read_to_string(side)?)?;
    let bytes = std::fs::read(path)?;
    if bytes.len() != meta.num_samples * 8 {
        return Err(Error::Shape(
            "waveform file length does not match metadata".into(),
        ));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok(Waveform {
        sample_rate: meta.sample_rate_hz,
        t0: meta.start_offset_s,
        oversampling: meta.oversampling,
        with_cp: meta.with_cp,
        samples,
    })
}
