//! Fisher information and Cramer-Rao bounds for path gains, delays and Dopplers.

use crate::channel::{dd_response, PathParams};
use crate::error::{invalid, Error, Result};
use crate::modem::{oddm_demodulate, oddm_modulate};
use crate::params::{DdFrame, SystemParams};
use crate::pulses::{rc_derivative_wrt_lp, PulseBank};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Parameter order within each path block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theta {
    Magnitude = 0,
    Phase = 1,
    Delay = 2,
    Doppler = 3,
}

/// Derivative of the noiseless response to `x` w.r.t. one parameter of `path`.
pub fn response_derivative(
    x: &DdFrame,
    path: &PathParams,
    which: Theta,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<DdFrame> {
    let unit = PathParams {
        h: Complex64::new(1.0, 0.0),
        ..*path
    };
    match which {
        Theta::Magnitude => {
            let u = dd_response(x, &[unit], p, pulses)?;
            let ph = if path.h.norm() > 0.0 {
                path.h / path.h.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            Ok(scale(u, ph))
        }
        Theta::Phase => {
            let u = dd_response(x, &[unit], p, pulses)?;
            Ok(scale(u, Complex64::new(0.0, 1.0) * path.h))
        }
        Theta::Delay | Theta::Doppler => {
            let s = oddm_modulate(x);
            let r = symbol_rate_derivative(&s, path, which, p, pulses);
            oddm_demodulate(&r, p.m(), p.n())
        }
    }
}

fn scale(mut f: DdFrame, a: Complex64) -> DdFrame {
    for v in f.as_mut_slice() {
        *v *= a;
    }
    f
}

// r[q] = h sum_d exp(j2pi k (q - l - d)/MN) g(d + floor(l) - l) s[q - floor(l) - d]
fn symbol_rate_derivative(
    s: &[Complex64],
    path: &PathParams,
    which: Theta,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Vec<Complex64> {
    let mn = s.len();
    let mnf = mn as f64;
    let q = p.q() as i64;
    let fl = path.l.floor();
    let fli = fl as i64;
    let mut r = vec![Complex64::new(0.0, 0.0); mn];
    for d in -q..=q {
        let u = d as f64 + fl - path.l;
        let g = pulses.rc_bins(u);
        let dg = if u.abs() > q as f64 {
            0.0
        } else {
            rc_derivative_wrt_lp(d + q, fli, path.l, p.q(), p.beta())
        };
        if g == 0.0 && dg == 0.0 {
            continue;
        }
        for (qi, rq) in r.iter_mut().enumerate() {
            let arg = qi as f64 - path.l - d as f64;
            let ph = Complex64::from_polar(1.0, 2.0 * PI * path.k * arg / mnf);
            let src = s[(qi as i64 - fli - d).rem_euclid(mn as i64) as usize];
            let factor = match which {
                Theta::Delay => Complex64::new(dg, -2.0 * PI * path.k / mnf * g),
                _ => Complex64::new(0.0, 2.0 * PI * arg / mnf * g),
            };
            *rq += path.h * ph * factor * src;
        }
    }
    r
}

/// Real symmetric Fisher information over `[|h|, arg h, l, k]` per path.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub data: DMatrix<f64>,
}

impl FisherMatrix {
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.data - self.data.transpose()).abs().max()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.data.clone()).eigenvalues.min()
    }
}

/// `F = (2 / sigma2) Re(J^H J)` for the response to pilot frame `x`.
pub fn fisher(
    paths: &[PathParams],
    x: &DdFrame,
    sigma2: f64,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<FisherMatrix> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return invalid("Fisher information needs sigma2 > 0");
    }
    for (i, a) in paths.iter().enumerate() {
        for b in &paths[i + 1..] {
            if a.l == b.l && a.k == b.k {
                return invalid("paths must be distinct");
            }
        }
    }
    let thetas = [Theta::Magnitude, Theta::Phase, Theta::Delay, Theta::Doppler];
    let mut cols = Vec::with_capacity(4 * paths.len());
    for path in paths {
        for &t in &thetas {
            cols.push(response_derivative(x, path, t, p, pulses)?.into_vec());
        }
    }
    let n = cols.len();
    let mut f = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: Complex64 = cols[i]
                .iter()
                .zip(&cols[j])
                .map(|(a, b)| a.conj() * b)
                .sum();
            let e = 2.0 / sigma2 * v.re;
            f[(i, j)] = e;
            f[(j, i)] = e;
        }
    }
    Ok(FisherMatrix { data: f })
}

/// Diagonal of the inverse Fisher matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crb {
    /// Per-path blocks of `[|h|, arg h, l, k]`, in squared units (bins for l, k).
    pub bounds: Vec<f64>,
    pub condition: f64,
}

impl Crb {
    pub fn get(&self, path: usize, which: Theta) -> f64 {
        self.bounds[4 * path + which as usize]
    }

    pub fn paths(&self) -> usize {
        self.bounds.len() / 4
    }

    /// Root of the path-averaged delay and Doppler bounds divided by the
    /// search spans, matching the NRMSE normalisation of the estimators.
    pub fn nrmse_form(&self, delay_span: f64, doppler_span: f64) -> (f64, f64) {
        let np = self.paths().max(1) as f64;
        let l: f64 = (0..self.paths())
            .map(|i| self.get(i, Theta::Delay))
            .sum::<f64>()
            / np;
        let k: f64 = (0..self.paths())
            .map(|i| self.get(i, Theta::Doppler))
            .sum::<f64>()
            / np;
        (l.sqrt() / delay_span, k.sqrt() / doppler_span)
    }
}

/// Condition number above which the bound is reported as unbounded.
pub const MAX_CONDITION: f64 = 1e12;

/// CRB by solving `F z = e_i` for each unit vector (no explicit inverse).
///
/// A numerically singular `F` yields infinite bounds for every parameter with
/// weight on a near-null eigenvector, plus the measured condition number.
pub fn crb_from_fisher(f: &FisherMatrix) -> Result<Crb> {
    let n = f.dim();
    if n == 0 {
        return Err(Error::Shape("empty Fisher matrix".into()));
    }
    let eig = SymmetricEigen::new(f.data.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        let mut bounds = vec![0.0; n];
        for (j, &ev) in eig.eigenvalues.iter().enumerate() {
            let null = ev <= max / MAX_CONDITION;
            for (i, b) in bounds.iter_mut().enumerate() {
                let w = eig.eigenvectors[(i, j)];
                if null && w.abs() > 1e-6 {
                    *b = f64::INFINITY;
                } else if !null && b.is_finite() {
                    *b += w * w / ev;
                }
            }
        }
        return Ok(Crb { bounds, condition });
    }
    let chol = f
        .data
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Fisher matrix not positive definite".into()))?;
    let bounds = (0..n)
        .map(|i| {
            let mut e = DVector::<f64>::zeros(n);
            e[i] = 1.0;
            chol.solve(&e)[i]
        })
        .collect();
    Ok(Crb { bounds, condition })
}

pub fn crb(
    paths: &[PathParams],
    x: &DdFrame,
    sigma2: f64,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<Crb> {
    crb_from_fisher(&fisher(paths, x, sigma2, p, pulses)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chirp::{build_pilot_frame, PilotKind};
    use proptest::prelude::*;

    fn params() -> SystemParams {
        SystemParams::desk()
            .with_grid(16, 8)
            .unwrap()
            .with_q(8)
            .unwrap()
    }

    fn perturbed(path: &PathParams, which: Theta, delta: f64) -> PathParams {
        let mut q = *path;
        match which {
            Theta::Magnitude => q.h = Complex64::from_polar(path.h.norm() + delta, path.h.arg()),
            Theta::Phase => q.h = Complex64::from_polar(path.h.norm(), path.h.arg() + delta),
            Theta::Delay => q.l += delta,
            Theta::Doppler => q.k += delta,
        }
        q
    }

    #[test]
    fn derivatives_match_central_differences() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let h = 1e-5;
        let cases = [
            (0.37, -1.2, PilotKind::DdSrnFmcw),
            (4.81, 2.6, PilotKind::Ddip),
            (7.5, 0.5, PilotKind::DdSrnFmcw),
        ];
        for (l, k, kind) in cases {
            let path = PathParams {
                h: Complex64::from_polar(0.9, 1.1),
                l,
                k,
            };
            let x = build_pilot_frame(&p, kind, 1.0).unwrap().frame;
            for which in [Theta::Magnitude, Theta::Phase, Theta::Delay, Theta::Doppler] {
                let an = response_derivative(&x, &path, which, &p, &pb).unwrap();
                let up = dd_response(&x, &[perturbed(&path, which, h)], &p, &pb).unwrap();
                let dn = dd_response(&x, &[perturbed(&path, which, -h)], &p, &pb).unwrap();
                let (mut err, mut nrm) = (0.0, 0.0);
                for ((a, u), d) in an.as_slice().iter().zip(up.as_slice()).zip(dn.as_slice()) {
                    err += (a - (u - d) / (2.0 * h)).norm_sqr();
                    nrm += a.norm_sqr();
                }
                assert!(
                    (err / nrm).sqrt() < 1e-4,
                    "{which:?} at l={l}: {}",
                    (err / nrm).sqrt()
                );
            }
        }
    }

    #[test]
    fn bound_scales_with_noise() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let x = build_pilot_frame(&p, PilotKind::DdSrnFmcw, 1.0)
            .unwrap()
            .frame;
        let path = [PathParams {
            h: Complex64::new(0.8, 0.3),
            l: 2.4,
            k: 0.7,
        }];
        let a = crb(&path, &x, 0.1, &p, &pb).unwrap();
        let b = crb(&path, &x, 0.2, &p, &pb).unwrap();
        for (u, v) in a.bounds.iter().zip(&b.bounds) {
            assert!((v / u - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_fisher_reports_infinity() {
        // zero gain leaves delay and Doppler unidentifiable
        let p = params();
        let pb = PulseBank::from_params(&p);
        let x = build_pilot_frame(&p, PilotKind::DdSrnFmcw, 1.0)
            .unwrap()
            .frame;
        let c = crb(
            &[PathParams {
                h: Complex64::new(0.0, 0.0),
                l: 2.4,
                k: 0.7,
            }],
            &x,
            0.1,
            &p,
            &pb,
        )
        .unwrap();
        assert!(c.condition > MAX_CONDITION);
        assert!(c.get(0, Theta::Delay).is_infinite());
        assert!(c.get(0, Theta::Magnitude).is_finite());
        let one = PathParams {
            h: Complex64::new(1.0, 0.0),
            l: 1.5,
            k: 0.5,
        };
        assert!(fisher(&[one, one], &x, 0.1, &p, &pb).is_err());
        assert!(fisher(&[one], &x, 0.0, &p, &pb).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fisher_is_symmetric_psd(l1 in 0.0f64..6.0, l2 in 0.0f64..6.0, k1 in -2.0f64..2.0, k2 in -2.0f64..2.0, ph in -3.0f64..3.0) {
            let p = params();
            let pb = PulseBank::from_params(&p);
            let x = build_pilot_frame(&p, PilotKind::DdSrnFmcw, 1.0).unwrap().frame;
            let paths = [
                PathParams { h: Complex64::from_polar(1.0, ph), l: l1, k: k1 },
                PathParams { h: Complex64::new(0.5, -0.2), l: l2 + 0.013, k: k2 },
            ];
            let f = fisher(&paths, &x, 0.5, &p, &pb).unwrap();
            let norm = f.data.norm();
            prop_assert!(f.asymmetry() <= 1e-12 * norm);
            prop_assert!(f.min_eigenvalue() >= -1e-8 * norm);
        }
    }
}
