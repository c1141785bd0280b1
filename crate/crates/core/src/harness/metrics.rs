//! Per-trial error metrics and sample statistics.

use crate::channel::{dd_response_fast, PathParams};
use crate::chirp::ddip_position;
use crate::error::Result;
use crate::params::{DdFrame, FrameRole, SystemParams};
use crate::pulses::PulseBank;
use crate::sensing::{to_paths, PathEstimate};
use num_complex::Complex64;

/// Association rule recorded in run manifests.
pub const ASSOCIATION_RULE: &str =
    "greedy nearest pair in (dl / l_span, dk / k_span); unmatched truths count as a full-span error";

/// NMSE of the estimated channel seen through a unit-energy impulse pilot.
pub fn nmse_vs_virtual_ddip(
    est: &[PathEstimate],
    truth: &[PathParams],
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<f64> {
    let mut x = DdFrame::zeros(p.m(), p.n(), FrameRole::Pilot);
    x.set(ddip_position(p), 0, Complex64::new(1.0, 0.0));
    let yt = dd_response_fast(&x, truth, p, pulses)?;
    let den = yt.energy();
    if est.is_empty() {
        return Ok(1.0);
    }
    let ye = dd_response_fast(&x, &to_paths(est), p, pulses)?;
    let num: f64 = yt
        .as_slice()
        .iter()
        .zip(ye.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(num / den)
}

/// Matched `(truth index, estimate index)` pairs, closest first.
pub fn associate(
    est: &[(f64, f64)],
    truth: &[(f64, f64)],
    l_span: f64,
    k_span: f64,
) -> Vec<(usize, usize)> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(est.len() * truth.len());
    for (ti, t) in truth.iter().enumerate() {
        for (ei, e) in est.iter().enumerate() {
            let d = ((e.0 - t.0) / l_span).powi(2) + ((e.1 - t.1) / k_span).powi(2);
            cand.push((d, ti, ei));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut t_used = vec![false; truth.len()];
    let mut e_used = vec![false; est.len()];
    let mut out = Vec::new();
    for (_, ti, ei) in cand {
        if !t_used[ti] && !e_used[ei] {
            t_used[ti] = true;
            e_used[ei] = true;
            out.push((ti, ei));
        }
    }
    out
}

/// Mean squared delay and Doppler errors over the true paths, in bins².
pub fn squared_errors(
    est: &[PathEstimate],
    truth: &[PathParams],
    l_span: f64,
    k_span: f64,
) -> (f64, f64) {
    let e: Vec<(f64, f64)> = est.iter().map(|x| (x.l, x.k)).collect();
    let t: Vec<(f64, f64)> = truth.iter().map(|x| (x.l, x.k)).collect();
    let pairs = associate(&e, &t, l_span, k_span);
    let mut sl = l_span * l_span * (t.len() - pairs.len()) as f64;
    let mut sk = k_span * k_span * (t.len() - pairs.len()) as f64;
    for (ti, ei) in pairs {
        sl += (e[ei].0 - t[ti].0).powi(2);
        sk += (e[ei].1 - t[ti].1).powi(2);
    }
    let n = t.len().max(1) as f64;
    (sl / n, sk / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Delay,
    Doppler,
}

/// RMS matched error on one axis divided by `normalizer`.
pub fn nrmse(
    est: &[PathEstimate],
    truth: &[PathParams],
    axis: Axis,
    l_span: f64,
    k_span: f64,
    normalizer: f64,
) -> f64 {
    let (sl, sk) = squared_errors(est, truth, l_span, k_span);
    match axis {
        Axis::Delay => sl.sqrt() / normalizer,
        Axis::Doppler => sk.sqrt() / normalizer,
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n < 2 || !mean.is_finite() {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `sqrt(mean(v)) / scale` with a delta-method standard error.
pub fn root_mean_stderr(v: &[f64], scale: f64) -> (f64, f64) {
    let (m, s) = mean_stderr(v);
    let r = m.sqrt();
    let se = if r > 0.0 && r.is_finite() {
        s / (2.0 * r)
    } else {
        0.0
    };
    (r / scale, se / scale)
}
