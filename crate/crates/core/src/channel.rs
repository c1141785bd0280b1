//! Linear time-varying multipath channel at symbol rate and in the
//! delay-Doppler domain, plus an oversampled continuous-time reference.

use crate::error::{invalid, Error, Result};
use crate::modem::{self, Waveform};
use crate::params::{DdFrame, FrameRole, SystemParams};
use crate::pulses::{dirichlet, floor_div, PulseBank};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;

/// One propagation path: complex gain, delay and Doppler in bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub h: Complex64,
    pub l: f64,
    pub k: f64,
}

impl Serialize for PathParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.h.re, self.h.im, self.l, self.k].serialize(s)
    }
}

impl<'de> Deserialize<'de> for PathParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<f64> = Vec::deserialize(d)?;
        if v.len() != 4 {
            return Err(D::Error::custom("path must be [re, im, l, k]"));
        }
        Ok(PathParams {
            h: Complex64::new(v[0], v[1]),
            l: v[2],
            k: v[3],
        })
    }
}

/// Paths plus the per-sample noise variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub paths: Vec<PathParams>,
    pub sigma_z2: f64,
}

impl ChannelRealization {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("channel serialize")
    }
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Noise variance for a given `Es/N0` in dB.
pub fn noise_variance(e_s: f64, esn0_db: f64) -> f64 {
    e_s * 10f64.powf(-esn0_db / 10.0)
}

/// Draw `P` paths: `l ~ U[0, l_max)`, `k ~ U[-k_max, k_max]`, `h ~ CN(0, 1/P)`.
pub fn sample_channel<R: Rng>(
    rng: &mut R,
    p: usize,
    l_max: f64,
    k_max: f64,
) -> Result<Vec<PathParams>> {
    if p == 0 {
        return invalid("at least one path required");
    }
    if !(l_max > 0.0 && k_max >= 0.0) {
        return invalid("channel extent must be positive");
    }
    let var = 1.0 / p as f64;
    Ok((0..p)
        .map(|_| {
            let l = rng.gen::<f64>() * l_max;
            let k = (2.0 * rng.gen::<f64>() - 1.0) * k_max;
            PathParams {
                h: cn(rng, var),
                l,
                k,
            }
        })
        .collect())
}

/// One draw of `CN(0, var)`.
pub fn cn<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    Complex64::new(a * s, b * s)
}

pub fn add_noise<R: Rng>(rng: &mut R, x: &mut [Complex64], sigma2: f64) {
    if sigma2 > 0.0 {
        for z in x.iter_mut() {
            *z += cn(rng, sigma2);
        }
    }
}

fn check_paths(paths: &[PathParams], p: &SystemParams) -> Result<()> {
    for path in paths {
        if !(path.l.is_finite()
            && path.k.is_finite()
            && path.h.re.is_finite()
            && path.h.im.is_finite())
        {
            return invalid("non-finite path parameter");
        }
        if path.l < 0.0 || path.l >= p.l_max() as f64 {
            return invalid(format!("delay {} outside [0, {})", path.l, p.l_max()));
        }
    }
    Ok(())
}

/// Noiseless symbol-rate channel output
/// `r[q] = sum_p h sum_d exp(j2pi k (q-l-d)/MN) g(d+floor(l)-l) s[(q-floor(l)-d) mod MN]`.
pub fn channel_symbol_rate(
    s: &[Complex64],
    paths: &[PathParams],
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<Vec<Complex64>> {
    let mn = p.frame_len();
    if s.len() != mn {
        return Err(Error::Shape(format!(
            "expected {mn} samples, got {}",
            s.len()
        )));
    }
    check_paths(paths, p)?;
    let q = p.q() as i64;
    let mut r = vec![Complex64::new(0.0, 0.0); mn];
    let mnf = mn as f64;
    for path in paths {
        let fl = path.l.floor();
        let fli = fl as i64;
        // phase step per sample, accumulated in closed form per row for accuracy
        for d in -q..=q {
            let g = pulses.rc_bins(d as f64 + fl - path.l);
            if g == 0.0 {
                continue;
            }
            let a = path.h * g;
            for (qi, rq) in r.iter_mut().enumerate() {
                let ph = 2.0 * PI * path.k * (qi as f64 - path.l - d as f64) / mnf;
                let src = (qi as i64 - fli - d).rem_euclid(mn as i64) as usize;
                *rq += a * Complex64::from_polar(1.0, ph) * s[src];
            }
        }
    }
    Ok(r)
}

/// Symbol-rate channel with additive `CN(0, sigma_z2)` noise.
pub fn apply_channel_symbol_rate<R: Rng>(
    rng: &mut R,
    s: &[Complex64],
    chan: &ChannelRealization,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<Vec<Complex64>> {
    let mut r = channel_symbol_rate(s, &chan.paths, p, pulses)?;
    add_noise(rng, &mut r, chan.sigma_z2);
    Ok(r)
}

/// Noiseless delay-Doppler response evaluated directly on the grid.
pub fn dd_response(
    x: &DdFrame,
    paths: &[PathParams],
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<DdFrame> {
    let (m, n) = (p.m(), p.n());
    if x.m() != m || x.n() != n {
        return Err(Error::Shape("frame does not match parameters".into()));
    }
    check_paths(paths, p)?;
    let q = p.q() as i64;
    let mn = (m * n) as f64;
    let nz_cols: Vec<usize> = (0..n)
        .filter(|&c| x.column(c).iter().any(|z| z.norm_sqr() > 0.0))
        .collect();
    let mut y = DdFrame::zeros(m, n, FrameRole::Received);
    let roots: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / n as f64))
        .collect();
    let taps = (2 * q + 1) as usize;
    let mut coef = vec![Complex64::new(0.0, 0.0); m * taps];
    let mut wrap = vec![0i64; m * taps];
    let mut srcs = vec![0usize; m * taps];
    let mut u = vec![Complex64::new(0.0, 0.0); m];
    let out = y.as_mut_slice();
    for path in paths {
        let fl = path.l.floor() as i64;
        // phi[t] = dirichlet(t + k) for t = ntilde - n in (-N, N)
        let phi: Vec<Complex64> = (0..2 * n - 1)
            .map(|t| dirichlet(t as f64 - (n as f64 - 1.0) + path.k, n))
            .collect();
        let g: Vec<f64> = (-q..=q)
            .map(|d| pulses.rc_bins((d + fl) as f64 - path.l))
            .collect();
        // exp(j2pi (m - l - d) k / MN) split into per-m and per-d factors
        let base = path.h * Complex64::from_polar(1.0, -2.0 * PI * path.l * path.k / mn);
        let rot_m: Vec<Complex64> = (0..m)
            .map(|mi| Complex64::from_polar(1.0, 2.0 * PI * mi as f64 * path.k / mn))
            .collect();
        let rot_d: Vec<Complex64> = (-q..=q)
            .zip(&g)
            .map(|(d, gd)| {
                base * *gd * Complex64::from_polar(1.0, -2.0 * PI * d as f64 * path.k / mn)
            })
            .collect();
        for mi in 0..m {
            for (di, d) in (-q..=q).enumerate() {
                let ix = mi * taps + di;
                coef[ix] = rot_m[mi] * rot_d[di];
                let j = mi as i64 - fl - d;
                wrap[ix] = floor_div(j, m as i64);
                srcs[ix] = j.rem_euclid(m as i64) as usize;
            }
        }
        // Y[m, n] += sum_nt phi(nt + k - n) u_nt[m], with
        // u_nt[m] = sum_d coef * exp(j2pi w nt / N) X[src, nt]
        for &nt in &nz_cols {
            let col = x.column(nt);
            for (mi, um) in u.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for ix in mi * taps..(mi + 1) * taps {
                    let xv = col[srcs[ix]];
                    if xv.re == 0.0 && xv.im == 0.0 {
                        continue;
                    }
                    let r = roots[(wrap[ix] * nt as i64).rem_euclid(n as i64) as usize];
                    acc += coef[ix] * r * xv;
                }
                *um = acc;
            }
            for ni in 0..n {
                let ph = phi[nt + n - 1 - ni];
                let dst = &mut out[ni * m..(ni + 1) * m];
                for (o, um) in dst.iter_mut().zip(&u) {
                    *o += ph * um;
                }
            }
        }
    }
    Ok(y)
}

/// Same response computed through the time domain (modulate, channel, demodulate).
pub fn dd_response_fast(
    x: &DdFrame,
    paths: &[PathParams],
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<DdFrame> {
    if x.m() != p.m() || x.n() != p.n() {
        return Err(Error::Shape("frame does not match parameters".into()));
    }
    let s = modem::oddm_modulate(x);
    let r = channel_symbol_rate(&s, paths, p, pulses)?;
    modem::oddm_demodulate(&r, p.m(), p.n())
}

/// Continuous-time reference: each path delays the pulse train by `l dt`,
/// scales by `h` and rotates by `exp(j 2 pi nu (t - tau - frac(l) dt))`.
///
/// The constant `frac(l)` offset aligns the phase origin with the symbol-rate
/// model, which references Doppler to the integer part of the delay.
pub fn apply_channel_oversampled(
    s: &[Complex64],
    paths: &[PathParams],
    p: &SystemParams,
    pulses: &PulseBank,
    span: usize,
) -> Result<Waveform> {
    if s.len() != p.frame_len() {
        return Err(Error::Shape(
            "symbol count does not match parameters".into(),
        ));
    }
    check_paths(paths, p)?;
    let (j0, ext) = modem::extend_symbols(s, p, true);
    let dt = pulses.dt;
    let nu_scale = 1.0 / (p.frame_len() as f64 * dt);
    let mut out: Option<Waveform> = None;
    for path in paths {
        let tau = path.l * dt;
        let mut w = modem::synth_ext_len(&ext, j0, tau, p.o(), pulses, span, p.l_max() + 1);
        let nu = path.k * nu_scale;
        for (i, z) in w.samples.iter_mut().enumerate() {
            let t = w.t0 + i as f64 / w.sample_rate;
            *z *= path.h
                * Complex64::from_polar(1.0, 2.0 * PI * nu * (t - tau - path.l.fract() * dt));
        }
        match out.as_mut() {
            None => out = Some(w),
            Some(acc) => {
                for (a, b) in acc.samples.iter_mut().zip(&w.samples) {
                    *a += b;
                }
            }
        }
    }
    out.ok_or_else(|| Error::InvalidParam("no paths".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chirp::{build_pilot_frame, PilotKind};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_frame(m: usize, n: usize, seed: u64) -> DdFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..m * n).map(|_| cn(&mut rng, 1.0)).collect();
        DdFrame::from_vec(m, n, FrameRole::Data, data).unwrap()
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn integer_delay_is_cyclic_shift() {
        let p = SystemParams::desk();
        let pb = PulseBank::from_params(&p);
        let s = modem::oddm_modulate(&random_frame(p.m(), p.n(), 1));
        let r = channel_symbol_rate(
            &s,
            &[PathParams {
                h: Complex64::new(1.0, 0.0),
                l: 3.0,
                k: 0.0,
            }],
            &p,
            &pb,
        )
        .unwrap();
        let mn = p.frame_len();
        for q in 0..mn {
            assert!((r[q] - s[(q + mn - 3) % mn]).norm() < 1e-12);
        }
    }

    #[test]
    fn channel_json_roundtrip() {
        let c = ChannelRealization {
            paths: vec![PathParams {
                h: Complex64::new(0.5, -0.25),
                l: 2.5,
                k: -1.75,
            }],
            sigma_z2: 0.01,
        };
        let s = c.to_json();
        assert!(s.contains("[0.5,-0.25,2.5,-1.75]"));
        assert_eq!(ChannelRealization::from_json(&s).unwrap(), c);
        assert!(ChannelRealization::from_json(r#"{"paths":[[1,2,3]],"sigma_z2":0}"#).is_err());
    }

    #[test]
    fn rejects_bad_delay() {
        let p = SystemParams::desk();
        let pb = PulseBank::from_params(&p);
        let s = vec![Complex64::new(0.0, 0.0); p.frame_len()];
        let bad = [PathParams {
            h: Complex64::new(1.0, 0.0),
            l: -0.5,
            k: 0.0,
        }];
        assert!(channel_symbol_rate(&s, &bad, &p, &pb).is_err());
        let bad = [PathParams {
            h: Complex64::new(1.0, 0.0),
            l: p.l_max() as f64,
            k: 0.0,
        }];
        assert!(channel_symbol_rate(&s, &bad, &p, &pb).is_err());
    }

    #[test]
    fn sampled_channel_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut e = 0.0;
        let trials = 20000;
        for _ in 0..trials {
            let paths = sample_channel(&mut rng, 4, 32.0, 5.0).unwrap();
            for path in &paths {
                assert!(path.l >= 0.0 && path.l < 32.0 && path.k.abs() <= 5.0);
            }
            e += paths.iter().map(|q| q.h.norm_sqr()).sum::<f64>();
        }
        assert!((e / trials as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn noise_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x = vec![Complex64::new(0.0, 0.0); 200_000];
        add_noise(&mut rng, &mut x, 0.3);
        let v = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!((v - 0.3).abs() < 0.005);
        assert!((noise_variance(1.0, 20.0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn dd_response_matches_time_domain() {
        let p = SystemParams::desk();
        let pb = PulseBank::from_params(&p);
        let x = random_frame(p.m(), p.n(), 2);
        let paths = [
            PathParams {
                h: Complex64::new(0.7, 0.2),
                l: 2.37,
                k: 1.61,
            },
            PathParams {
                h: Complex64::new(-0.3, 0.5),
                l: 30.9,
                k: -4.2,
            },
            PathParams {
                h: Complex64::new(0.1, -0.4),
                l: 0.2,
                k: 0.05,
            },
        ];
        let a = dd_response(&x, &paths, &p, &pb).unwrap();
        let b = dd_response_fast(&x, &paths, &p, &pb).unwrap();
        assert!(rel_err(a.as_slice(), b.as_slice()) < 1e-10);
    }

    #[test]
    fn pilot_response_cases() {
        // a path whose taps straddle the frame start exercises the wrap phase
        let p = SystemParams::desk();
        let pb = PulseBank::from_params(&p);
        let pilot = build_pilot_frame(&p, PilotKind::DdSrnFmcw, 1.0).unwrap();
        let paths = [PathParams {
            h: Complex64::new(1.0, 0.0),
            l: 0.6,
            k: 2.3,
        }];
        let a = dd_response(&pilot.frame, &paths, &p, &pb).unwrap();
        let b = dd_response_fast(&pilot.frame, &paths, &p, &pb).unwrap();
        assert!(rel_err(a.as_slice(), b.as_slice()) < 1e-10);
    }

    #[test]
    fn oversampled_route_matches_symbol_rate() {
        // Q = 32 keeps the RC truncation floor well below the tolerance.
        let p = SystemParams::desk()
            .with_grid(64, 32)
            .unwrap()
            .with_q(32)
            .unwrap()
            .with_l_max(40)
            .unwrap();
        let pb = PulseBank::from_params(&p);
        let s = modem::oddm_modulate(&random_frame(p.m(), p.n(), 3));
        let span = 160;
        for &(l, k) in &[(2.5, 0.3), (4.0, 0.0), (7.25, -0.4), (1.75, 0.5)] {
            let paths = [PathParams {
                h: Complex64::new(0.8, -0.6),
                l,
                k,
            }];
            let w = apply_channel_oversampled(&s, &paths, &p, &pb, span).unwrap();
            let r = modem::matched_filter_sample(&w, &p, &pb, span).unwrap();
            let e = channel_symbol_rate(&s, &paths, &p, &pb).unwrap();
            let err = rel_err(&r, &e);
            assert!(err <= 1e-3, "l={l} k={k}: {err}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn channel_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let p = SystemParams::new(16, 8, 1e-3, 0.0, 0.15, 6, 4, 5).unwrap();
            let pb = PulseBank::from_params(&p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let paths = sample_channel(&mut rng, 2, 5.0, 2.0).unwrap();
            let x1 = modem::oddm_modulate(&random_frame(16, 8, seed ^ 1));
            let x2 = modem::oddm_modulate(&random_frame(16, 8, seed ^ 2));
            let comb: Vec<Complex64> = x1.iter().zip(&x2).map(|(u, v)| u * a + v * b).collect();
            let r = channel_symbol_rate(&comb, &paths, &p, &pb).unwrap();
            let r1 = channel_symbol_rate(&x1, &paths, &p, &pb).unwrap();
            let r2 = channel_symbol_rate(&x2, &paths, &p, &pb).unwrap();
            for i in 0..r.len() {
                prop_assert!((r[i] - (r1[i] * a + r2[i] * b)).norm() < 1e-10);
            }
        }

        #[test]
        fn direct_and_fast_responses_agree(seed in any::<u64>()) {
            let p = SystemParams::new(16, 8, 1e-3, 0.0, 0.15, 6, 4, 7).unwrap();
            let pb = PulseBank::from_params(&p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let paths = sample_channel(&mut rng, 3, 7.0, 3.0).unwrap();
            let x = random_frame(16, 8, seed);
            let a = dd_response(&x, &paths, &p, &pb).unwrap();
            let b = dd_response_fast(&x, &paths, &p, &pb).unwrap();
            prop_assert!(rel_err(a.as_slice(), b.as_slice()) < 1e-10);
        }
    }
}
