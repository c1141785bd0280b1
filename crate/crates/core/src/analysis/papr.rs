//! Peak-to-average power ratio and its empirical CCDF.

use super::marcum::ccdf_analytic;
use crate::error::{invalid, Error, Result};
use crate::params::{db_to_lin, lin_to_db, DdFrame};
use crate::pulses::PulseBank;
use crate::{modem, params::SystemParams};
use serde::{Deserialize, Serialize};

/// Peak over mean power of `samples`, in dB.
pub fn papr(samples: &[num_complex::Complex64]) -> Result<f64> {
    if samples.is_empty() {
        return invalid("PAPR of an empty waveform");
    }
    let mut peak = 0.0f64;
    let mut sum = 0.0;
    for z in samples {
        let p = z.norm_sqr();
        peak = peak.max(p);
        sum += p;
    }
    if sum == 0.0 {
        return Err(Error::Numerical("PAPR of a zero-power waveform".into()));
    }
    Ok(lin_to_db(peak * samples.len() as f64 / sum))
}

/// PAPR of the frame body, using the exact periodic synthesis at `O` samples
/// per symbol. The cyclic prefix never changes the body, so it is not built.
pub fn frame_papr(x: &DdFrame, p: &SystemParams, pulses: &PulseBank) -> Result<f64> {
    let s = modem::oddm_modulate(x);
    papr(&modem::synthesize_periodic(&s, p.o(), pulses)?)
}

/// Empirical `P(PAPR > g)` over a threshold grid in dB.
pub fn empirical_ccdf(papr_db: &[f64], grid_db: &[f64]) -> Vec<f64> {
    let mut sorted = papr_db.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len().max(1) as f64;
    grid_db
        .iter()
        .map(|&g| {
            let below = sorted.partition_point(|&v| v <= g);
            (sorted.len() - below) as f64 / n
        })
        .collect()
}

/// Analytic and empirical PAPR tails on a common dB grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfCurve {
    pub gamma0_db: Vec<f64>,
    pub analytic: Vec<f64>,
    pub empirical: Vec<f64>,
    pub mn: usize,
    /// Pilot-to-data power ratio, linear.
    pub rho: f64,
}

impl CcdfCurve {
    pub fn new(gamma0_db: Vec<f64>, papr_db: &[f64], mn: usize, rho: f64) -> Self {
        let analytic = gamma0_db
            .iter()
            .map(|&g| ccdf_analytic(rho, mn, db_to_lin(g)))
            .collect();
        let empirical = empirical_ccdf(papr_db, &gamma0_db);
        CcdfCurve {
            gamma0_db,
            analytic,
            empirical,
            mn,
            rho,
        }
    }
}

/// Threshold (dB) where the analytic tail falls to `level`, by bisection.
pub fn analytic_crossing_db(rho: f64, mn: usize, level: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ccdf_analytic(rho, mn, db_to_lin(mid)) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Empirical `(1 - level)` quantile of the PAPR samples (dB), interpolated
/// linearly between order statistics.
pub fn empirical_crossing_db(papr_db: &[f64], level: f64) -> Result<f64> {
    if papr_db.is_empty() {
        return invalid("no PAPR samples");
    }
    let mut s = papr_db.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let pos = (1.0 - level) * (s.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    Ok(if i + 1 < s.len() {
        s[i] * (1.0 - f) + s[i + 1] * f
    } else {
        s[i]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chirp::{build_pilot_frame, PilotKind};
    use crate::params::FrameRole;
    use num_complex::Complex64;

    #[test]
    fn constant_envelope_is_zero_db() {
        let s: Vec<Complex64> = (0..100)
            .map(|i| Complex64::from_polar(2.0, i as f64 * 0.37))
            .collect();
        assert!(papr(&s).unwrap().abs() < 1e-12);
        assert!(papr(&[]).is_err());
        assert!(papr(&[Complex64::new(0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn single_impulse_frame() {
        // oracle: the body is MN copies-worth of mean power but one pulse peak
        let p = SystemParams::desk();
        let pb = PulseBank::from_params(&p);
        let mut x = DdFrame::zeros(p.m(), p.n(), FrameRole::Pilot);
        x.set(3, 0, Complex64::new(1.0, 0.0));
        let s = modem::oddm_modulate(&x);
        let w = modem::synthesize_periodic(&s, p.o(), &pb).unwrap();
        let peak = w.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let mean = w.iter().map(|z| z.norm_sqr()).sum::<f64>() / w.len() as f64;
        let got = frame_papr(&x, &p, &pb).unwrap();
        assert!((got - lin_to_db(peak / mean)).abs() < 1e-12);
        // an impulse column is a train of N pulses, so the peak is near
        // a(0)^2 dt and the mean is N / (MN dt) * dt
        let expect = lin_to_db(pb.srrc(0.0).powi(2) * pb.dt * p.m() as f64);
        assert!((got - expect).abs() < 0.1, "{got} vs {expect}");
    }

    #[test]
    fn chirp_pilot_is_low_papr() {
        let p = SystemParams::desk();
        let pb = PulseBank::from_params(&p);
        let pilot = build_pilot_frame(&p, PilotKind::DdSrnFmcw, 1.0).unwrap();
        let ddip = build_pilot_frame(&p, PilotKind::Ddip, 1.0).unwrap();
        let a = frame_papr(&pilot.frame, &p, &pb).unwrap();
        let b = frame_papr(&ddip.frame, &p, &pb).unwrap();
        assert!(a < 4.0, "{a}");
        assert!(b > a + 10.0);
    }

    #[test]
    fn empirical_tail_counts() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            empirical_ccdf(&v, &[0.0, 2.0, 2.5, 4.0]),
            vec![1.0, 0.5, 0.5, 0.0]
        );
        assert!((empirical_crossing_db(&v, 0.5).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn crossing_is_consistent() {
        let g = analytic_crossing_db(0.3, 1024, 1e-2);
        assert!((ccdf_analytic(0.3, 1024, db_to_lin(g)) - 1e-2).abs() < 1e-9);
    }
}
