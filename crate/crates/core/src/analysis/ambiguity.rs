//! Cross-ambiguity of pilot trains, its separable approximation and the
//! single linear-chirp delay ambiguity curves.

use crate::chirp::make_chirp;
use crate::error::{invalid, Result};
use crate::modem::{synth_ext, Waveform};
use crate::params::SystemParams;
use crate::pulses::{dirichlet, sinc, PulseBank};
use num_complex::Complex64;
use std::f64::consts::PI;

/// SRRC-shaped train of `N` unit chirps. With `extend`, one extra chirp is
/// placed before and after so delayed copies stay cyclic over `|tau| < T`.
pub fn pilot_train(
    p: &SystemParams,
    pulses: &PulseBank,
    extend: bool,
    span: usize,
) -> Result<Waveform> {
    let m = p.m();
    let c = make_chirp(m)?;
    let (j0, len) = if extend {
        (-(m as i64), p.frame_len() + 2 * m)
    } else {
        (0, p.frame_len())
    };
    let ext: Vec<Complex64> = (0..len)
        .map(|i| c[(j0 + i as i64).rem_euclid(m as i64) as usize])
        .collect();
    Ok(synth_ext(&ext, j0, 0.0, p.o(), pulses, span, extend))
}

/// `A(tau, nu) = int tx(t) ref*(t - tau) exp(-j 2 pi nu (t - tau)) dt` by
/// direct summation. Every `tau` must map to a whole number of samples.
/// Output is indexed `[tau][nu]`.
pub fn ambiguity_numeric(
    tx: &Waveform,
    reference: &Waveform,
    taus: &[f64],
    nus: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    let fs = tx.sample_rate;
    if (reference.sample_rate - fs).abs() > 1e-9 * fs {
        return invalid("tx and reference sample rates differ");
    }
    let mut shifts = Vec::with_capacity(taus.len());
    for &tau in taus {
        let s = (tx.t0 - reference.t0 - tau) * fs;
        if (s - s.round()).abs() > 1e-6 {
            return invalid(format!("delay {tau} is not on the sample grid"));
        }
        shifts.push(s.round() as i64);
    }
    let ts = 1.0 / fs;
    let fft_len = uniform_fft_len(nus, fs);
    let rows = crate::par::map(
        &shifts.iter().zip(taus).collect::<Vec<_>>(),
        |&(&shift, &tau)| {
            // product over the overlap, then one DTFT per nu
            let lo = (-shift).max(0);
            let hi = (reference.samples.len() as i64 - shift).min(tx.samples.len() as i64);
            let prod: Vec<Complex64> = (lo..hi.max(lo))
                .map(|i| tx.samples[i as usize] * reference.samples[(i + shift) as usize].conj())
                .collect();
            let t_start = tx.t0 + lo as f64 * ts - tau;
            match fft_len {
                Some(k) => row_by_fft(&prod, t_start, ts, nus, k),
                None => nus
                    .iter()
                    .map(|&nu| {
                        let mut acc = Complex64::new(0.0, 0.0);
                        let step = Complex64::from_polar(1.0, -2.0 * PI * nu * ts);
                        for (c, chunk) in prod.chunks(512).enumerate() {
                            let t = t_start + (c * 512) as f64 * ts;
                            let mut rot = Complex64::from_polar(1.0, -2.0 * PI * nu * t);
                            for &v in chunk {
                                acc += v * rot;
                                rot *= step;
                            }
                        }
                        acc * ts
                    })
                    .collect(),
            }
        },
    );
    Ok(rows)
}

/// `Some(K)` when `nus` are integer multiples of a step `fs / K`, so one
/// length-`K` DFT of the folded product gives every Doppler value.
fn uniform_fft_len(nus: &[f64], fs: f64) -> Option<usize> {
    if nus.len() < 8 {
        return None;
    }
    let step = nus[1] - nus[0];
    if step <= 0.0 {
        return None;
    }
    let k = fs / step;
    if (k - k.round()).abs() > 1e-6 * k || k.round() > (1u64 << 24) as f64 {
        return None;
    }
    let on_grid = nus.iter().all(|&nu| {
        let j = nu / step;
        (j - j.round()).abs() < 1e-6
    });
    on_grid.then_some(k.round() as usize)
}

fn row_by_fft(prod: &[Complex64], t_start: f64, ts: f64, nus: &[f64], k: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    for (i, v) in prod.iter().enumerate() {
        buf[i % k] += v;
    }
    crate::fft::forward(&mut buf);
    let step = nus[1] - nus[0];
    nus.iter()
        .map(|&nu| {
            let j = (nu / step).round() as i64;
            buf[j.rem_euclid(k as i64) as usize]
                * Complex64::from_polar(ts, -2.0 * PI * nu * t_start)
        })
        .collect()
}

/// Separable approximation
/// `exp(j2pi nu tau) N phi(-nu N T) sum_zeta g(tau + zeta dt) R_nu(zeta)` with
/// `R_nu(zeta) = sum_m exp(-j2pi nu dt m) c[m] c*[(m + zeta) mod M]`.
pub fn ambiguity_dd_approx(
    tau: f64,
    nu: f64,
    p: &SystemParams,
    c: &[Complex64],
    pulses: &PulseBank,
) -> Complex64 {
    let m = c.len() as i64;
    let dt = p.delay_resolution();
    let n = p.n();
    let mut acc = Complex64::new(0.0, 0.0);
    for zeta in (-m / 2 + 1)..=(m / 2) {
        let g = pulses.rc(tau + zeta as f64 * dt);
        if g.abs() < 1e-14 {
            continue;
        }
        let r: Complex64 = (0..m)
            .map(|i| {
                Complex64::from_polar(1.0, -2.0 * PI * nu * dt * i as f64)
                    * c[i as usize]
                    * c[(i + zeta).rem_euclid(m) as usize].conj()
            })
            .sum();
        acc += r * g;
    }
    let nt = n as f64 * p.t();
    Complex64::from_polar(1.0, 2.0 * PI * nu * tau) * dirichlet(-nu * nt, n) * n as f64 * acc
}

/// Ambiguity grids at `tau_over` points per delay bin and `nu_over` per
/// Doppler bin, symmetric about zero.
pub fn default_grid(
    p: &SystemParams,
    tau_span: f64,
    nu_span: f64,
    tau_over: usize,
    nu_over: usize,
) -> (Vec<f64>, Vec<f64>) {
    let dtau = p.delay_resolution() / tau_over as f64;
    let dnu = p.doppler_resolution() / nu_over as f64;
    let nt = (tau_span / dtau).floor() as i64;
    let nn = (nu_span / dnu).floor() as i64;
    (
        (-nt..=nt).map(|i| i as f64 * dtau).collect(),
        (-nn..=nn).map(|i| i as f64 * dnu).collect(),
    )
}

/// Largest normalised magnitude (dB) outside the strips
/// `|tau| < tau_guard` and `|nu| < nu_guard` around the two axes.
pub fn off_axis_peak_db(
    surface: &[Vec<Complex64>],
    taus: &[f64],
    nus: &[f64],
    tau_guard: f64,
    nu_guard: f64,
    peak: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in surface.iter().enumerate() {
        if taus[i].abs() < tau_guard {
            continue;
        }
        for (j, v) in row.iter().enumerate() {
            if nus[j].abs() < nu_guard {
                continue;
            }
            worst = worst.max(v.norm());
        }
    }
    20.0 * (worst / peak).log10()
}

/// Delay ambiguity of an infinite chirp against a chirp of length `T` with
/// rate `M / T^2` (sinc-shaped).
pub fn chirp_af_ideal(tau: f64, f_c: f64, m: usize, t: f64) -> Complex64 {
    let eps = m as f64 / (t * t);
    Complex64::from_polar(
        1.0,
        2.0 * PI * ((f_c - eps * tau / 2.0) * tau + eps * tau * t / 2.0),
    ) * t
        * sinc(eps * t * tau)
}

/// Autocorrelation of a single finite chirp of length `T`.
pub fn chirp_af_finite(tau: f64, f_c: f64, m: usize, t: f64) -> Complex64 {
    if tau.abs() >= t {
        return Complex64::new(0.0, 0.0);
    }
    let eps = m as f64 / (t * t);
    let (a, b) = (tau.max(0.0), (t + tau).min(t));
    let w = 2.0 * PI * eps * tau;
    // int_a^b exp(j w t) dt = (b - a) exp(j w (a + b)/2) sinc(w (b - a) / 2pi)
    let integral =
        Complex64::from_polar((b - a) * sinc(w * (b - a) / (2.0 * PI)), w * (a + b) / 2.0);
    Complex64::from_polar(1.0, 2.0 * PI * (f_c - eps * tau / 2.0) * tau) * integral
}

/// Largest `|A(tau)| / |A(0)|` in dB beyond the first null at `|tau| >= null`.
pub fn max_sidelobe_db(af: impl Fn(f64) -> Complex64, null: f64, limit: f64, points: usize) -> f64 {
    let peak = af(0.0).norm();
    let mut worst = 0.0f64;
    for i in 0..=points {
        let tau = null + (limit - null) * i as f64 / points as f64;
        worst = worst.max(af(tau).norm()).max(af(-tau).norm());
    }
    20.0 * (worst / peak).log10()
}
