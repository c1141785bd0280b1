//! Delay-Doppler chirp compression, orthogonal matching pursuit with grid
//! evolution, and data-aided sensing.

use crate::channel::{dd_response, dd_response_fast, PathParams};
use crate::chirp::Pilot;
use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::params::{DdFrame, FrameRole, SystemParams};
use crate::pulses::PulseBank;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// One estimated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEstimate {
    pub h: Complex64,
    pub l: f64,
    pub k: f64,
    /// Number of refinement rounds applied.
    pub level: usize,
}

impl PathEstimate {
    pub fn to_path(&self) -> PathParams {
        PathParams {
            h: self.h,
            l: self.l,
            k: self.k,
        }
    }
}

pub fn to_paths(est: &[PathEstimate]) -> Vec<PathParams> {
    est.iter().map(PathEstimate::to_path).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingConfig {
    pub p_max: usize,
    /// Grid-evolution depth.
    pub levels: usize,
    pub i_das: usize,
    /// Odd side length of the candidate grid.
    pub neighborhood: usize,
}

impl Default for SensingConfig {
    fn default() -> Self {
        SensingConfig {
            p_max: 4,
            levels: 10,
            i_das: 4,
            neighborhood: 3,
        }
    }
}

impl SensingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p_max == 0 {
            return invalid("P_max must be >= 1");
        }
        if self.neighborhood == 0 || self.neighborhood % 2 == 0 {
            return invalid("neighborhood must be odd");
        }
        if self.i_das == 0 {
            return invalid("I_DAS must be >= 1");
        }
        Ok(())
    }
}

/// Pursuit output.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    pub paths: Vec<PathEstimate>,
    /// Set when the newest atom made the stack rank deficient and was dropped.
    pub rank_deficient: bool,
    /// Residual energy after each accepted path, starting with `||Y||^2`.
    pub residual_energies: Vec<f64>,
}

/// `D[md, n] = sum_m conj(c[(m - md) mod M]) Y[m, n]`, per column via FFT.
pub fn dd_compress(y: &DdFrame, c: &[Complex64]) -> Result<DdFrame> {
    let m = y.m();
    if c.len() != m {
        return Err(Error::Shape(format!(
            "reference length {} != M {}",
            c.len(),
            m
        )));
    }
    let mut cf = c.to_vec();
    fft::forward(&mut cf);
    let mut out = DdFrame::zeros(m, y.n(), FrameRole::Compressed);
    let scale = 1.0 / m as f64;
    for n in 0..y.n() {
        let mut col = y.column(n).to_vec();
        fft::forward(&mut col);
        for (a, b) in col.iter_mut().zip(&cf) {
            *a *= b.conj();
        }
        fft::inverse(&mut col);
        for (o, v) in out.column_mut(n).iter_mut().zip(&col) {
            *o = v * scale;
        }
    }
    Ok(out)
}

/// Unit-gain pilot response, vectorised.
pub fn atom(
    pilot: &Pilot,
    l: f64,
    k: f64,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<Vec<Complex64>> {
    let path = [PathParams {
        h: Complex64::new(1.0, 0.0),
        l,
        k,
    }];
    Ok(dd_response(&pilot.frame, &path, p, pulses)?.into_vec())
}

fn objective(a: &[Complex64], y: &[Complex64]) -> f64 {
    let mut ip = Complex64::new(0.0, 0.0);
    let mut na = 0.0;
    for (u, v) in a.iter().zip(y) {
        ip += u.conj() * v;
        na += u.norm_sqr();
    }
    if na == 0.0 {
        0.0
    } else {
        ip.norm_sqr() / na
    }
}

fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Coarse on-grid location of the strongest pilot echo in `resid`.
fn coarse(resid: &DdFrame, pilot: &Pilot, p: &SystemParams) -> Result<(usize, i64)> {
    let d = dd_compress(resid, &pilot.reference)?;
    let n = p.n();
    let mut best = (0usize, 0i64);
    let mut best_v = -1.0;
    // scan delay-major so ties resolve to the lowest delay, then lowest Doppler
    for md in 0..p.l_max() {
        let mut ks: Vec<(i64, usize)> = (0..n)
            .map(|ni| {
                let k = if ni <= n / 2 {
                    ni as i64
                } else {
                    ni as i64 - n as i64
                };
                (k, ni)
            })
            .collect();
        ks.sort();
        for (k, ni) in ks {
            let v = d.get(md, ni).norm_sqr();
            if v > best_v {
                best_v = v;
                best = (md, k);
            }
        }
    }
    Ok(best)
}

/// Refine a coarse estimate over `levels` rounds of halving grid spacing.
/// Returns the estimate and the objective after each round.
pub fn grid_evolution(
    resid: &[Complex64],
    pilot: &Pilot,
    start: (f64, f64),
    cfg: &SensingConfig,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<((f64, f64), Vec<f64>)> {
    let (mut l, mut k) = start;
    let mut best = objective(&atom(pilot, l, k, p, pulses)?, resid);
    let mut trace = vec![best];
    let half = (cfg.neighborhood / 2) as i64;
    for lvl in 1..=cfg.levels {
        let step = 0.5f64.powi(lvl as i32);
        let mut cands = Vec::new();
        for i in -half..=half {
            for j in -half..=half {
                let (cl, ck) = (l + i as f64 * step, k + j as f64 * step);
                if cl >= 0.0 && cl < p.l_max() as f64 {
                    cands.push((cl, ck));
                }
            }
        }
        let vals = eval_candidates(&cands, resid, pilot, p, pulses)?;
        let (mut nl, mut nk) = (l, k);
        for (&(cl, ck), &v) in cands.iter().zip(&vals) {
            let better = v > best || (v == best && (cl < nl || (cl == nl && ck < nk)));
            if better {
                best = v;
                nl = cl;
                nk = ck;
            }
        }
        l = nl;
        k = nk;
        trace.push(best);
    }
    Ok(((l, k), trace))
}

#[cfg(feature = "parallel")]
fn eval_candidates(
    cands: &[(f64, f64)],
    resid: &[Complex64],
    pilot: &Pilot,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    cands
        .par_iter()
        .map(|&(l, k)| Ok(objective(&atom(pilot, l, k, p, pulses)?, resid)))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn eval_candidates(
    cands: &[(f64, f64)],
    resid: &[Complex64],
    pilot: &Pilot,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<Vec<f64>> {
    cands
        .iter()
        .map(|&(l, k)| Ok(objective(&atom(pilot, l, k, p, pulses)?, resid)))
        .collect()
}

/// Least-squares gains for the stacked atoms; `None` when rank deficient.
fn ls_gains(atoms: &[Vec<Complex64>], y: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = atoms.len();
    let mut gram = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = DVector::<Complex64>::zeros(n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = atoms[i]
                .iter()
                .zip(&atoms[j])
                .map(|(a, b)| a.conj() * b)
                .sum();
        }
        rhs[i] = atoms[i].iter().zip(y).map(|(a, b)| a.conj() * b).sum();
    }
    let max_diag = (0..n).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
    let chol = gram.clone().cholesky()?;
    let l = chol.l();
    let min_piv = (0..n)
        .map(|i| l[(i, i)].re.powi(2))
        .fold(f64::INFINITY, f64::min);
    if min_piv < 1e-10 * max_diag {
        return None;
    }
    Some(chol.solve(&rhs).iter().copied().collect())
}

fn residual(y: &[Complex64], atoms: &[Vec<Complex64>], gains: &[Complex64]) -> Vec<Complex64> {
    let mut r = y.to_vec();
    for (a, g) in atoms.iter().zip(gains) {
        for (x, v) in r.iter_mut().zip(a) {
            *x -= g * v;
        }
    }
    r
}

/// Re-evolve every path against the frame with all other paths removed,
/// until no location moves (at most eight passes).
fn refine_jointly(
    y: &[Complex64],
    pilot: &Pilot,
    cfg: &SensingConfig,
    p: &SystemParams,
    pulses: &PulseBank,
    locs: &mut [(f64, f64)],
    atoms: &mut [Vec<Complex64>],
    mut gains: Vec<Complex64>,
) -> Result<Option<Vec<Complex64>>> {
    for _ in 0..8 {
        let mut moved = false;
        for i in 0..locs.len() {
            let mut r = residual(y, atoms, &gains);
            for (x, v) in r.iter_mut().zip(&atoms[i]) {
                *x += gains[i] * v;
            }
            let (nl, _) = grid_evolution(&r, pilot, locs[i], cfg, p, pulses)?;
            if nl != locs[i] {
                moved = true;
                locs[i] = nl;
                atoms[i] = atom(pilot, nl.0, nl.1, p, pulses)?;
                match ls_gains(atoms, y) {
                    Some(g) => gains = g,
                    None => return Ok(None),
                }
            }
        }
        if !moved {
            break;
        }
    }
    Ok(Some(gains))
}

/// Successive path estimation with grid evolution and joint gain re-fit.
pub fn omp_grid_evolution(
    y: &DdFrame,
    pilot: &Pilot,
    cfg: &SensingConfig,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<OmpResult> {
    cfg.validate()?;
    if y.m() != p.m() || y.n() != p.n() {
        return Err(Error::Shape("frame does not match parameters".into()));
    }
    let yv = y.as_slice();
    let e0 = energy(yv);
    let mut resid = yv.to_vec();
    let mut paths: Vec<PathEstimate> = Vec::new();
    let mut atoms: Vec<Vec<Complex64>> = Vec::new();
    let mut energies = vec![e0];
    let mut rank_deficient = false;
    if e0 == 0.0 {
        return Ok(OmpResult {
            paths,
            rank_deficient,
            residual_energies: energies,
        });
    }
    while paths.len() < cfg.p_max {
        let rframe = DdFrame::from_vec(p.m(), p.n(), FrameRole::Received, resid.clone())?;
        let (l0, k0) = coarse(&rframe, pilot, p)?;
        let ((l, k), _) = grid_evolution(&resid, pilot, (l0 as f64, k0 as f64), cfg, p, pulses)?;
        let mut locs: Vec<(f64, f64)> = paths.iter().map(|e| (e.l, e.k)).collect();
        locs.push((l, k));
        atoms.push(atom(pilot, l, k, p, pulses)?);
        let mut gains = match ls_gains(&atoms, yv) {
            Some(g) => g,
            None => {
                atoms.pop();
                rank_deficient = true;
                break;
            }
        };
        if locs.len() > 1 {
            match refine_jointly(
                yv,
                pilot,
                cfg,
                p,
                pulses,
                &mut locs,
                &mut atoms,
                gains.clone(),
            )? {
                Some(g) => gains = g,
                None => {
                    rank_deficient = true;
                    break;
                }
            }
        }
        let new_resid = residual(yv, &atoms, &gains);
        let e_new = energy(&new_resid);
        let e_prev = *energies.last().expect("nonempty");
        if e_prev - e_new <= 1e-12 * e0 {
            // the newest path removes nothing: discard it and stop
            break;
        }
        paths = locs
            .iter()
            .zip(&gains)
            .map(|(&(l, k), &h)| PathEstimate {
                h,
                l,
                k,
                level: cfg.levels,
            })
            .collect();
        resid = new_resid;
        energies.push(e_new);
    }
    Ok(OmpResult {
        paths,
        rank_deficient,
        residual_energies: energies,
    })
}

/// Data-aided sensing output with the estimate of every outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct DasResult {
    pub paths: Vec<PathEstimate>,
    pub iterations: Vec<Vec<PathEstimate>>,
    pub rank_deficient: bool,
}

/// Alternate pursuit on the data-cancelled frame with data-response rebuilds.
pub fn das(
    y: &DdFrame,
    pilot: &Pilot,
    x_d: &DdFrame,
    cfg: &SensingConfig,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<DasResult> {
    cfg.validate()?;
    let mut yc = y.clone();
    let mut iterations = Vec::with_capacity(cfg.i_das);
    let mut rank_deficient = false;
    for _ in 0..cfg.i_das {
        let res = omp_grid_evolution(&yc, pilot, cfg, p, pulses)?;
        rank_deficient |= res.rank_deficient;
        let yd = dd_response_fast(x_d, &to_paths(&res.paths), p, pulses)?;
        yc = y.sub(&yd, FrameRole::Received)?;
        iterations.push(res.paths);
    }
    let paths = iterations.last().cloned().unwrap_or_default();
    Ok(DasResult {
        paths,
        iterations,
        rank_deficient,
    })
}

/// CSV rows `trial_id,p,re_h,im_h,l,k`.
pub fn write_estimates_csv<W: Write>(mut w: W, rows: &[(usize, Vec<PathEstimate>)]) -> Result<()> {
    writeln!(w, "trial_id,p,re_h,im_h,l,k")?;
    for (trial, est) in rows {
        for (i, e) in est.iter().enumerate() {
            writeln!(
                w,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                trial, i, e.h.re, e.h.im, e.l, e.k
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{add_noise, cn};
    use crate::chirp::{build_pilot_frame, make_chirp, PilotKind};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (SystemParams, PulseBank, Pilot) {
        let p = SystemParams::desk();
        let pb = PulseBank::from_params(&p);
        let pilot = build_pilot_frame(&p, PilotKind::DdSrnFmcw, 1.0).unwrap();
        (p, pb, pilot)
    }

    fn response(pilot: &Pilot, paths: &[PathParams], p: &SystemParams, pb: &PulseBank) -> DdFrame {
        dd_response(&pilot.frame, paths, p, pb).unwrap()
    }

    #[test]
    fn compress_matches_direct_loop() {
        let (p, _, _) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = DdFrame::from_vec(
            p.m(),
            p.n(),
            FrameRole::Received,
            (0..p.frame_len()).map(|_| cn(&mut rng, 1.0)).collect(),
        )
        .unwrap();
        let c = make_chirp(p.m()).unwrap();
        let d = dd_compress(&y, &c).unwrap();
        let m = p.m();
        for md in 0..m {
            for n in 0..p.n() {
                let mut acc = Complex64::new(0.0, 0.0);
                for mi in 0..m {
                    acc += c[(mi + m - md) % m].conj() * y.get(mi, n);
                }
                assert!((acc - d.get(md, n)).norm() < 1e-10);
            }
        }
        let z = DdFrame::zeros(m, p.n(), FrameRole::Received);
        assert!(dd_compress(&z, &c).unwrap().energy() == 0.0);
        assert!(dd_compress(&z, &c[1..]).is_err());
    }

    #[test]
    fn compression_peak_and_profile() {
        let (p, pb, pilot) = setup();
        let scale = p.m() as f64 * (p.n() as f64 * pilot.e_c).sqrt();
        let y = response(
            &pilot,
            &[PathParams {
                h: Complex64::new(0.6, 0.8),
                l: 5.0,
                k: 2.0,
            }],
            &p,
            &pb,
        );
        let d = dd_compress(&y, &pilot.reference).unwrap();
        let (mut bm, mut bn, mut bv) = (0, 0, 0.0);
        for m in 0..p.m() {
            for n in 0..p.n() {
                if d.get(m, n).norm() > bv {
                    bv = d.get(m, n).norm();
                    bm = m;
                    bn = n;
                }
            }
        }
        assert_eq!((bm, bn), (5, 2));
        // zero Doppler: peak and delay profile are exact
        let h = Complex64::new(0.6, 0.8);
        let y = response(&pilot, &[PathParams { h, l: 9.0, k: 0.0 }], &p, &pb);
        let d = dd_compress(&y, &pilot.reference).unwrap();
        assert!((d.get(9, 0).norm() - scale).abs() < 1e-6 * scale);
        let l = 9.37;
        let y = response(&pilot, &[PathParams { h, l, k: 0.0 }], &p, &pb);
        let d = dd_compress(&y, &pilot.reference).unwrap();
        for md in 0..p.m() {
            // delays wrap cyclically; bins above M/2 are negative offsets
            let off = if md > p.m() / 2 {
                md as f64 - p.m() as f64 - l
            } else {
                md as f64 - l
            };
            let want = scale * pb.rc_bins(off);
            assert!((d.get(md, 0).norm() - want.abs()).abs() < 1e-6 * scale);
        }
    }

    #[test]
    fn single_fractional_path() {
        let (p, pb, pilot) = setup();
        let truth = PathParams {
            h: Complex64::new(1.0, 0.0),
            l: 7.3,
            k: -1.6,
        };
        let y = response(&pilot, &[truth], &p, &pb);
        let cfg = SensingConfig {
            p_max: 1,
            ..Default::default()
        };
        let res = omp_grid_evolution(&y, &pilot, &cfg, &p, &pb).unwrap();
        assert_eq!(res.paths.len(), 1);
        let e = res.paths[0];
        assert!((e.l - 7.3).abs() <= 2f64.powi(-8), "l {}", e.l);
        assert!((e.k + 1.6).abs() <= 2f64.powi(-8), "k {}", e.k);
        // the result is the best point of a dense 2^-12 grid around it within one step
        let step = 2f64.powi(-12);
        let yv = y.as_slice();
        let best = objective(&atom(&pilot, e.l, e.k, &p, &pb).unwrap(), yv);
        for i in -3..=3 {
            for j in -3..=3 {
                let v = objective(
                    &atom(
                        &pilot,
                        e.l + i as f64 * step * 4.0,
                        e.k + j as f64 * step * 4.0,
                        &p,
                        &pb,
                    )
                    .unwrap(),
                    yv,
                );
                assert!(v <= best * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn grid_evolution_is_monotone() {
        let (p, pb, pilot) = setup();
        let y = response(
            &pilot,
            &[PathParams {
                h: Complex64::new(0.3, -0.9),
                l: 12.71,
                k: 3.33,
            }],
            &p,
            &pb,
        );
        let (_, trace) = grid_evolution(
            y.as_slice(),
            &pilot,
            (13.0, 3.0),
            &SensingConfig::default(),
            &p,
            &pb,
        )
        .unwrap();
        assert!(trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn two_on_grid_paths() {
        let (p, pb, pilot) = setup();
        let truth = [
            PathParams {
                h: Complex64::new(0.8, 0.1),
                l: 4.0,
                k: 1.0,
            },
            PathParams {
                h: Complex64::new(-0.2, 0.5),
                l: 11.0,
                k: -3.0,
            },
        ];
        let y = response(&pilot, &truth, &p, &pb);
        let res = omp_grid_evolution(&y, &pilot, &SensingConfig::default(), &p, &pb).unwrap();
        assert_eq!(res.paths.len(), 2);
        for t in &truth {
            assert!(res
                .paths
                .iter()
                .any(|e| e.l == t.l && e.k == t.k && (e.h - t.h).norm() < 1e-9));
        }
        assert!(*res.residual_energies.last().unwrap() <= 1e-6 * y.energy());
        let one = omp_grid_evolution(
            &y,
            &pilot,
            &SensingConfig {
                p_max: 1,
                ..Default::default()
            },
            &p,
            &pb,
        )
        .unwrap();
        assert_eq!(one.paths.len(), 1);
    }

    #[test]
    fn single_atom_ls_is_normalized_correlation() {
        let (p, pb, pilot) = setup();
        let a = atom(&pilot, 3.25, 0.5, &p, &pb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y: Vec<Complex64> = (0..a.len()).map(|_| cn(&mut rng, 1.0)).collect();
        let g = ls_gains(&[a.clone()], &y).unwrap()[0];
        let ip: Complex64 = a.iter().zip(&y).map(|(u, v)| u.conj() * v).sum();
        let want = ip / energy(&a);
        assert!((g - want).norm() < 1e-12 * want.norm().max(1.0));
    }

    #[test]
    fn duplicate_atom_is_rank_deficient() {
        let (p, pb, pilot) = setup();
        let a = atom(&pilot, 3.25, 0.5, &p, &pb).unwrap();
        assert!(ls_gains(&[a.clone(), a.clone()], &a).is_none());
    }

    #[test]
    fn das_cancels_data() {
        let (p, pb, _) = setup();
        let pilot = build_pilot_frame(&p, PilotKind::DdSrnFmcw, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut xd = DdFrame::zeros(p.m(), p.n(), FrameRole::Data);
        for n in 1..p.n() {
            for m in 0..p.m() {
                xd.set(m, n, cn(&mut rng, 1.0));
            }
        }
        let truth = [
            PathParams {
                h: Complex64::new(0.7, 0.2),
                l: 5.4,
                k: 1.3,
            },
            PathParams {
                h: Complex64::new(-0.3, 0.5),
                l: 17.8,
                k: -2.6,
            },
        ];
        let x = pilot.frame.add(&xd, FrameRole::Composite).unwrap();
        let mut y = dd_response(&x, &truth, &p, &pb).unwrap();
        add_noise(&mut rng, y.as_mut_slice(), 0.01);
        let cfg = SensingConfig {
            p_max: 2,
            ..Default::default()
        };
        let res = das(&y, &pilot, &xd, &cfg, &p, &pb).unwrap();
        assert_eq!(res.iterations.len(), 4);
        let yd_true = dd_response(&xd, &truth, &p, &pb).unwrap();
        let interf = |est: &[PathEstimate]| {
            let yd = dd_response(&xd, &to_paths(est), &p, &pb).unwrap();
            yd_true.sub(&yd, FrameRole::Received).unwrap().energy()
        };
        let e1 = interf(&res.iterations[0]);
        let e2 = interf(&res.iterations[1]);
        assert!(e2 < e1, "{e2} !< {e1}");
        for t in &truth {
            assert!(res
                .paths
                .iter()
                .any(|e| (e.l - t.l).abs() < 0.1 && (e.k - t.k).abs() < 0.1));
        }
    }

    #[test]
    fn das_without_data_equals_omp() {
        let (p, pb, pilot) = setup();
        let y = response(
            &pilot,
            &[PathParams {
                h: Complex64::new(1.0, 0.0),
                l: 3.6,
                k: 0.4,
            }],
            &p,
            &pb,
        );
        let zero = DdFrame::zeros(p.m(), p.n(), FrameRole::Data);
        let cfg = SensingConfig {
            p_max: 1,
            i_das: 2,
            ..Default::default()
        };
        let a = das(&y, &pilot, &zero, &cfg, &p, &pb).unwrap();
        let b = omp_grid_evolution(&y, &pilot, &cfg, &p, &pb).unwrap();
        assert_eq!(a.paths, b.paths);
    }

    #[test]
    fn ddip_pilot_is_supported() {
        let p = SystemParams::desk();
        let pb = PulseBank::from_params(&p);
        let pilot = build_pilot_frame(&p, PilotKind::Ddip, 1.0).unwrap();
        let y = response(
            &pilot,
            &[PathParams {
                h: Complex64::new(0.5, 0.5),
                l: 6.3,
                k: 2.2,
            }],
            &p,
            &pb,
        );
        let res = omp_grid_evolution(
            &y,
            &pilot,
            &SensingConfig {
                p_max: 1,
                ..Default::default()
            },
            &p,
            &pb,
        )
        .unwrap();
        assert!((res.paths[0].l - 6.3).abs() < 2f64.powi(-8));
        assert!((res.paths[0].k - 2.2).abs() < 2f64.powi(-8));
    }

    #[test]
    fn estimates_csv() {
        let mut buf = Vec::new();
        let e = PathEstimate {
            h: Complex64::new(1.0, -1.0),
            l: 2.5,
            k: 0.25,
            level: 10,
        };
        write_estimates_csv(&mut buf, &[(3, vec![e])]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("trial_id,p,re_h,im_h,l,k\n3,0,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn scale_equivariance(re in -3.0f64..3.0, im in -3.0f64..3.0) {
            prop_assume!(re.abs() + im.abs() > 0.1);
            let (p, pb, pilot) = setup();
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut y = response(&pilot, &[PathParams { h: Complex64::new(0.9, 0.3), l: 8.6, k: -2.3 }], &p, &pb);
            add_noise(&mut rng, y.as_mut_slice(), 0.05);
            let gamma = Complex64::new(re, im);
            let ys = DdFrame::from_vec(p.m(), p.n(), FrameRole::Received, y.as_slice().iter().map(|z| z * gamma).collect()).unwrap();
            let cfg = SensingConfig { p_max: 1, levels: 6, ..Default::default() };
            let a = omp_grid_evolution(&y, &pilot, &cfg, &p, &pb).unwrap();
            let b = omp_grid_evolution(&ys, &pilot, &cfg, &p, &pb).unwrap();
            prop_assert_eq!(a.paths[0].l, b.paths[0].l);
            prop_assert_eq!(a.paths[0].k, b.paths[0].k);
            prop_assert!((a.paths[0].h * gamma - b.paths[0].h).norm() < 1e-9 * gamma.norm());
        }
    }
}
