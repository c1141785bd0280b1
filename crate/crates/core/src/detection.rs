//! Effective channel operator, soft SIC-MMSE detection and joint channel
//! estimation and data detection.

use crate::channel::{dd_response_fast, PathParams};
use crate::chirp::Pilot;
use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::modem::{oddm_demodulate, oddm_modulate};
use crate::params::{DdFrame, FrameRole, SystemParams};
use crate::pulses::PulseBank;
use crate::sensing::{omp_grid_evolution, to_paths, PathEstimate, SensingConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Symbol alphabet with bit labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub name: String,
    pub points: Vec<Complex64>,
    pub labels: Vec<u32>,
    pub bits_per_symbol: usize,
}

impl Constellation {
    /// Gray-labelled unit-energy 4-QAM.
    pub fn qam4() -> Self {
        let s = 1.0 / 2f64.sqrt();
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for b in 0..4u32 {
            let re = if b & 1 == 0 { s } else { -s };
            let im = if b & 2 == 0 { s } else { -s };
            points.push(Complex64::new(re, im));
            labels.push(b);
        }
        Constellation {
            name: "qam4".into(),
            points,
            labels,
            bits_per_symbol: 2,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "qam4" => Ok(Self::qam4()),
            other => Err(Error::Config(format!(
                "unknown constellation preset '{other}'"
            ))),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Constellation {
            points: self.points.iter().map(|z| z * a).collect(),
            ..self.clone()
        }
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn bit_errors(&self, a: usize, b: usize) -> u32 {
        (self.labels[a] ^ self.labels[b]).count_ones()
    }
}

/// The symbol-rate channel as a banded cyclic operator.
///
/// Column `q'` has entries on rows `q' + offsets[a]` (mod `MN`).
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub mn: usize,
    pub offsets: Vec<i64>,
    /// `cols[q' * L + a] = G[(q' + offsets[a]) mod MN, q']`.
    cols: Vec<Complex64>,
    /// For each column shift `delta`, the pairs `(a, c)` with `offsets[a] - delta = offsets[c]`.
    shifts: Vec<(i64, Vec<(usize, usize)>)>,
}

pub fn build_effective_channel(
    paths: &[PathParams],
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<EffectiveChannel> {
    if paths.is_empty() {
        return invalid("effective channel needs at least one path");
    }
    let q = p.q() as i64;
    let mn = p.frame_len();
    let mnf = mn as f64;
    let mut offsets: Vec<i64> = paths
        .iter()
        .flat_map(|path| {
            let fl = path.l.floor() as i64;
            (-q..=q).map(move |d| fl + d)
        })
        .collect();
    offsets.sort_unstable();
    offsets.dedup();
    let lg = offsets.len();
    let mut cols = vec![ZERO; mn * lg];
    for path in paths {
        let fl = path.l.floor() as i64;
        for (a, &off) in offsets.iter().enumerate() {
            let d = off - fl;
            if d < -q || d > q {
                continue;
            }
            let g = pulses.rc_bins((d + fl) as f64 - path.l);
            if g == 0.0 {
                continue;
            }
            let amp = path.h * g;
            for qc in 0..mn {
                let row = (qc as i64 + off).rem_euclid(mn as i64);
                let ph = 2.0 * PI * path.k * (row as f64 - path.l - d as f64) / mnf;
                cols[qc * lg + a] += amp * Complex64::from_polar(1.0, ph);
            }
        }
    }
    let mut deltas: Vec<i64> = Vec::new();
    for &a in &offsets {
        for &c in &offsets {
            deltas.push(a - c);
        }
    }
    deltas.sort_unstable();
    deltas.dedup();
    let shifts = deltas
        .into_iter()
        .map(|delta| {
            let pairs = offsets
                .iter()
                .enumerate()
                .filter_map(|(a, &oa)| offsets.binary_search(&(oa - delta)).ok().map(|c| (a, c)))
                .collect();
            (delta, pairs)
        })
        .collect();
    Ok(EffectiveChannel {
        mn,
        offsets,
        cols,
        shifts,
    })
}

impl EffectiveChannel {
    /// Number of rows in each spreading vector.
    pub fn lg(&self) -> usize {
        self.offsets.len()
    }

    /// Spreading vector `g_q` (column `q` restricted to rows `q + offsets`).
    pub fn g(&self, q: usize) -> &[Complex64] {
        &self.cols[q * self.lg()..(q + 1) * self.lg()]
    }

    fn row(&self, q: usize, a: usize) -> usize {
        (q as i64 + self.offsets[a]).rem_euclid(self.mn as i64) as usize
    }

    /// `G s`.
    pub fn apply(&self, s: &[Complex64]) -> Vec<Complex64> {
        let mut r = vec![ZERO; self.mn];
        for (qc, &sv) in s.iter().enumerate() {
            if sv == ZERO {
                continue;
            }
            for (a, gv) in self.g(qc).iter().enumerate() {
                r[self.row(qc, a)] += gv * sv;
            }
        }
        r
    }

    /// Dense entry `G[row, col]`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let off = row as i64 - col as i64;
        for cand in [off, off - self.mn as i64, off + self.mn as i64] {
            if let Ok(a) = self.offsets.binary_search(&cand) {
                return self.cols[col * self.lg() + a];
            }
        }
        ZERO
    }

    /// Sub-channel for sample `q`: the columns touching rows `q + offsets`
    /// and the dense `L_g x W` block of `G` on those rows and columns.
    pub fn sub_channel(&self, q: usize) -> (Vec<usize>, DMatrix<Complex64>) {
        let cols: Vec<usize> = self
            .shifts
            .iter()
            .map(|(d, _)| (q as i64 + d).rem_euclid(self.mn as i64) as usize)
            .collect();
        let rows: Vec<usize> = (0..self.lg()).map(|a| self.row(q, a)).collect();
        let m = DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.entry(rows[i], cols[j]));
        (cols, m)
    }

    fn span(&self) -> usize {
        (self.offsets[self.lg() - 1] - self.offsets[0]) as usize
    }
}

/// Banded `G V G^H`, stored as `band[r * (S + 1) + d] = R[r, r + d]` with
/// `S` the offset span. Updated in place when one prior variance changes.
struct BandCov {
    width: usize,
    band: Vec<Complex64>,
}

impl BandCov {
    fn new(g: &EffectiveChannel, v: &[f64]) -> Self {
        let width = g.span() + 1;
        let mut bc = BandCov {
            width,
            band: vec![ZERO; g.mn * width],
        };
        for (c, &vc) in v.iter().enumerate() {
            bc.add(g, c, vc);
        }
        bc
    }

    /// Add `dv g_c g_c^H`.
    fn add(&mut self, g: &EffectiveChannel, c: usize, dv: f64) {
        if dv == 0.0 {
            return;
        }
        let col = g.g(c);
        for (i, gi) in col.iter().enumerate() {
            let base = g.row(c, i) * self.width;
            let ei = gi * dv;
            for j in i..col.len() {
                self.band[base + (g.offsets[j] - g.offsets[i]) as usize] += ei * col[j].conj();
            }
        }
    }

    /// Lower triangle of `sigma2 I + G_q V_q G_q^H`, row-major into `a`.
    fn local(&self, g: &EffectiveChannel, q: usize, sigma2: f64, a: &mut [Complex64]) {
        let lg = g.lg();
        for i in 0..lg {
            let base = g.row(q, i) * self.width;
            for j in i..lg {
                // a[j][i] = R[r_j, r_i] = conj(R[r_i, r_j])
                a[j * lg + i] = self.band[base + (g.offsets[j] - g.offsets[i]) as usize].conj();
            }
            a[i * lg + i].re += sigma2;
        }
    }
}

/// In-place Cholesky of the lower triangle of row-major `a`, then solve
/// `a u = b`. Returns `false` when `a` is not positive definite.
fn cholesky_solve(a: &mut [Complex64], n: usize, b: &[Complex64], u: &mut [Complex64]) -> bool {
    for j in 0..n {
        let rj = &mut a[j * n..(j + 1) * n];
        let d = rj[j].re - rj[..j].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !(d > 0.0) {
            return false;
        }
        let ljj = d.sqrt();
        rj[j] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let (top, bottom) = a.split_at_mut(i * n);
            let rj = &top[j * n..j * n + j];
            let ri = &mut bottom[..n];
            let mut s = ri[j];
            for (x, y) in ri[..j].iter().zip(rj) {
                s -= x * y.conj();
            }
            ri[j] = s / ljj;
        }
    }
    for i in 0..n {
        let ri = &a[i * n..i * n + i];
        let mut s = b[i];
        for (l, y) in ri.iter().zip(&u[..i]) {
            s -= l * y;
        }
        u[i] = s / a[i * n + i].re;
    }
    for i in (0..n).rev() {
        let mut s = u[i];
        for k in i + 1..n {
            s -= a[k * n + i].conj() * u[k];
        }
        u[i] = s / a[i * n + i].re;
    }
    true
}

/// Known DD positions (pilot) with their values.
#[derive(Debug, Clone)]
pub struct KnownSymbols {
    pub mask: Vec<bool>,
    pub values: DdFrame,
}

impl KnownSymbols {
    /// Mark the zero-Doppler column as known and equal to the pilot.
    pub fn pilot_column(pilot: &Pilot) -> Self {
        let (m, n) = (pilot.frame.m(), pilot.frame.n());
        let mask = (0..m * n).map(|i| i < m).collect();
        KnownSymbols {
            mask,
            values: pilot.frame.clone(),
        }
    }
}

/// Per-symbol posteriors and per-sample priors.
#[derive(Debug, Clone)]
pub struct SymbolBeliefs {
    pub mean: Vec<Complex64>,
    pub var: Vec<f64>,
    /// Hard decision (constellation index) per DD position; `None` when known.
    pub decision: Vec<Option<usize>>,
    pub s_hat: Vec<Complex64>,
    pub v_time: Vec<f64>,
}

/// Detector state carried across sweeps.
#[derive(Debug, Clone)]
pub struct SicState {
    m: usize,
    n: usize,
    r: Vec<Complex64>,
    pub beliefs: SymbolBeliefs,
    known: Option<KnownSymbols>,
    pub ridge_added: bool,
}

impl SicState {
    pub fn new(y: &DdFrame, symbol_var: f64, known: Option<KnownSymbols>) -> Result<Self> {
        let (m, n) = (y.m(), y.n());
        let mut mean = vec![ZERO; m * n];
        let mut var = vec![symbol_var; m * n];
        if let Some(k) = &known {
            if k.mask.len() != m * n || k.values.m() != m || k.values.n() != n {
                return Err(Error::Shape(
                    "known-symbol mask does not match frame".into(),
                ));
            }
            for i in 0..m * n {
                if k.mask[i] {
                    mean[i] = k.values.as_slice()[i];
                    var[i] = 0.0;
                }
            }
        }
        let mut st = SicState {
            m,
            n,
            r: oddm_modulate(y),
            beliefs: SymbolBeliefs {
                mean,
                var,
                decision: vec![None; m * n],
                s_hat: vec![ZERO; m * n],
                v_time: vec![0.0; m * n],
            },
            known,
            ridge_added: false,
        };
        st.refresh_time_priors();
        Ok(st)
    }

    fn refresh_time_priors(&mut self) {
        let frame = DdFrame::from_vec(self.m, self.n, FrameRole::Data, self.beliefs.mean.clone())
            .expect("shape");
        self.beliefs.s_hat = oddm_modulate(&frame);
        for mi in 0..self.m {
            self.set_row_var(mi);
        }
    }

    fn set_row_var(&mut self, mi: usize) {
        let (m, n) = (self.m, self.n);
        let v = (0..n).map(|ni| self.beliefs.var[ni * m + mi]).sum::<f64>() / n as f64;
        for nd in 0..n {
            self.beliefs.v_time[nd * m + mi] = v;
        }
    }

    /// Current soft estimate of the DD frame.
    pub fn mean_frame(&self) -> DdFrame {
        DdFrame::from_vec(self.m, self.n, FrameRole::Data, self.beliefs.mean.clone())
            .expect("shape")
    }

    /// One pass over all delay rows in ascending order.
    pub fn sweep(&mut self, g: &EffectiveChannel, sigma2: f64, a: &Constellation) -> Result<()> {
        let (m, n) = (self.m, self.n);
        if g.mn != m * n {
            return Err(Error::Shape(
                "effective channel does not match frame".into(),
            ));
        }
        let lg = g.lg();
        let ridge = if sigma2 > 0.0 {
            sigma2
        } else {
            self.ridge_added = true;
            1e-12
        };
        let sqrt_n = (n as f64).sqrt();
        let mut z = vec![ZERO; n];
        let mut noise = vec![0.0; n];
        let mut cov = vec![ZERO; lg * lg];
        let mut bc = BandCov::new(g, &self.beliefs.v_time);
        let mut u = vec![ZERO; lg];
        let gs = g.apply(&self.beliefs.s_hat);
        let mut dr: Vec<Complex64> = self.r.iter().zip(&gs).map(|(x, y)| x - y).collect();
        for mi in 0..m {
            for nd in 0..n {
                let qi = nd * m + mi;
                let gq = g.g(qi);
                let shat = self.beliefs.s_hat[qi];
                bc.local(g, qi, ridge, &mut cov);
                if !cholesky_solve(&mut cov, lg, gq, &mut u) {
                    return Err(Error::Numerical(
                        "local covariance not positive definite".into(),
                    ));
                }
                let mut mu = 0.0;
                let mut st = ZERO;
                for (aix, (uv, gv)) in u.iter().zip(gq).enumerate() {
                    mu += (uv.conj() * gv).re;
                    st += uv.conj() * (dr[g.row(qi, aix)] + gv * shat);
                }
                let vq = self.beliefs.v_time[qi];
                if mu > 0.0 {
                    z[nd] = st / mu;
                    noise[nd] = (1.0 / mu - vq).max(1e-300);
                } else {
                    z[nd] = ZERO;
                    noise[nd] = f64::INFINITY;
                }
            }
            // time samples of this row to the Doppler domain
            fft::forward(&mut z);
            for v in z.iter_mut() {
                *v /= sqrt_n;
            }
            let nv = noise.iter().sum::<f64>() / n as f64;
            for ni in 0..n {
                let idx = ni * m + mi;
                if self.known.as_ref().is_some_and(|k| k.mask[idx]) {
                    continue;
                }
                let (mean, var, dec) = soft_symbol(z[ni], nv, a);
                self.beliefs.mean[idx] = mean;
                self.beliefs.var[idx] = var;
                self.beliefs.decision[idx] = Some(dec);
            }
            // back to time samples for this row
            let mut row: Vec<Complex64> = (0..n).map(|ni| self.beliefs.mean[ni * m + mi]).collect();
            fft::inverse(&mut row);
            for (nd, v) in row.iter().enumerate() {
                let qi = nd * m + mi;
                let new = v / sqrt_n;
                let delta = new - self.beliefs.s_hat[qi];
                self.beliefs.s_hat[qi] = new;
                // keep dr = r - G s_hat current
                for (aix, gv) in g.g(qi).iter().enumerate() {
                    dr[g.row(qi, aix)] -= gv * delta;
                }
            }
            let old: Vec<f64> = (0..n).map(|nd| self.beliefs.v_time[nd * m + mi]).collect();
            self.set_row_var(mi);
            for (nd, vo) in old.iter().enumerate() {
                let qi = nd * m + mi;
                bc.add(g, qi, self.beliefs.v_time[qi] - vo);
            }
        }
        Ok(())
    }
}

/// Posterior mean, variance and MAP index of `x` given `obs = x + CN(0, nv)`.
fn soft_symbol(obs: Complex64, nv: f64, a: &Constellation) -> (Complex64, f64, usize) {
    if !nv.is_finite() {
        let e = a.mean_energy();
        return (ZERO, e, 0);
    }
    let metrics: Vec<f64> = a
        .points
        .iter()
        .map(|p| -(obs - p).norm_sqr() / nv)
        .collect();
    let mx = metrics.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = metrics.iter().map(|m| (m - mx).exp()).collect();
    let tot: f64 = w.iter().sum();
    let mut mean = ZERO;
    let mut e2 = 0.0;
    let mut best = 0;
    for (i, (p, wi)) in a.points.iter().zip(&w).enumerate() {
        mean += p * (wi / tot);
        e2 += p.norm_sqr() * wi / tot;
        if *wi > w[best] {
            best = i;
        }
    }
    (mean, (e2 - mean.norm_sqr()).max(0.0), best)
}

/// Detection result.
#[derive(Debug, Clone)]
pub struct Detection {
    /// Hard-decision frame (known positions hold their known values).
    pub frame: DdFrame,
    pub beliefs: SymbolBeliefs,
    pub ridge_added: bool,
}

fn finish(st: SicState, a: &Constellation) -> Detection {
    let mut frame = DdFrame::zeros(st.m, st.n, FrameRole::Data);
    for (i, d) in st.beliefs.decision.iter().enumerate() {
        let v = match d {
            Some(ix) => a.points[*ix],
            None => st.beliefs.mean[i],
        };
        frame.as_mut_slice()[i] = v;
    }
    Detection {
        frame,
        ridge_added: st.ridge_added,
        beliefs: st.beliefs,
    }
}

/// Soft SIC-MMSE detection with a known channel.
pub fn sic_mmse_detect(
    y: &DdFrame,
    g: &EffectiveChannel,
    sigma2: f64,
    a: &Constellation,
    i_det: usize,
    known: Option<KnownSymbols>,
) -> Result<Detection> {
    if i_det == 0 {
        return invalid("I_DET must be >= 1");
    }
    let mut st = SicState::new(y, a.mean_energy(), known)?;
    for _ in 0..i_det {
        st.sweep(g, sigma2, a)?;
    }
    Ok(finish(st, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JceddConfig {
    pub i_jcedd: usize,
    pub sensing: SensingConfig,
}

impl Default for JceddConfig {
    fn default() -> Self {
        JceddConfig {
            i_jcedd: 8,
            sensing: SensingConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JceddResult {
    pub detection: Detection,
    pub paths: Vec<PathEstimate>,
}

/// Alternate pilot-based channel estimation on the data-cancelled frame with
/// one SIC-MMSE sweep, keeping the pilot column fixed.
pub fn jcedd(
    y: &DdFrame,
    pilot: &Pilot,
    sigma2: f64,
    a: &Constellation,
    cfg: &JceddConfig,
    p: &SystemParams,
    pulses: &PulseBank,
) -> Result<JceddResult> {
    if cfg.i_jcedd == 0 {
        return invalid("I_JCEDD must be >= 1");
    }
    let known = KnownSymbols::pilot_column(pilot);
    let mut st = SicState::new(y, a.mean_energy(), Some(known))?;
    let mut est: Vec<PathEstimate> = Vec::new();
    for _ in 0..cfg.i_jcedd {
        let mut xd = st.mean_frame();
        for v in xd.column_mut(0) {
            *v = ZERO;
        }
        let yc = if est.is_empty() {
            y.clone()
        } else {
            y.sub(
                &dd_response_fast(&xd, &to_paths(&est), p, pulses)?,
                FrameRole::Received,
            )?
        };
        est = omp_grid_evolution(&yc, pilot, &cfg.sensing, p, pulses)?.paths;
        if est.is_empty() {
            break;
        }
        let g = build_effective_channel(&to_paths(&est), p, pulses)?;
        st.sweep(&g, sigma2, a)?;
    }
    Ok(JceddResult {
        detection: finish(st, a),
        paths: est,
    })
}

/// Transmitted-vs-detected bit errors over positions where `decision` is set.
pub fn count_bit_errors(
    sent: &[usize],
    det: &Detection,
    a: &Constellation,
    positions: &[usize],
) -> (u64, u64) {
    let mut errs = 0u64;
    let mut bits = 0u64;
    for &i in positions {
        let d = det.beliefs.decision[i].unwrap_or(usize::MAX);
        bits += a.bits_per_symbol as u64;
        errs += if d == usize::MAX {
            a.bits_per_symbol as u64
        } else {
            a.bit_errors(sent[i], d) as u64
        };
    }
    (errs, bits)
}

/// CSV rows `trial_id,m,n,re,im,bits` for every decided position.
pub fn write_detection_csv<W: Write>(
    mut w: W,
    trial: usize,
    det: &Detection,
    a: &Constellation,
) -> Result<()> {
    writeln!(w, "trial_id,m,n,re,im,bits")?;
    let m = det.frame.m();
    for (i, d) in det.beliefs.decision.iter().enumerate() {
        if let Some(ix) = d {
            let z = a.points[*ix];
            let bits = format!("{:0width$b}", a.labels[*ix], width = a.bits_per_symbol);
            writeln!(
                w,
                "{},{},{},{:.16e},{:.16e},{}",
                trial,
                i % m,
                i / m,
                z.re,
                z.im,
                bits
            )?;
        }
    }
    Ok(())
}

/// Demodulated frame of a received time-domain vector; convenience for tests.
pub fn received_frame(r: &[Complex64], p: &SystemParams) -> Result<DdFrame> {
    oddm_demodulate(r, p.m(), p.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{add_noise, channel_symbol_rate, cn, sample_channel};
    use crate::chirp::{build_pilot_frame, PilotKind};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> SystemParams {
        SystemParams::desk().with_q(8).unwrap()
    }

    fn random_symbols(rng: &mut ChaCha8Rng, count: usize, a: &Constellation) -> Vec<usize> {
        (0..count)
            .map(|_| rng.gen_range(0..a.points.len()))
            .collect()
    }

    #[test]
    fn qam4_preset() {
        let a = Constellation::preset("qam4").unwrap();
        assert!((a.mean_energy() - 1.0).abs() < 1e-15);
        assert!(Constellation::preset("qam64").is_err());
        // Gray labelling: nearest neighbours differ in one bit
        for i in 0..4 {
            for j in 0..4 {
                let d = (a.points[i] - a.points[j]).norm();
                if (d - 2f64.sqrt()).abs() < 1e-12 {
                    assert_eq!(a.bit_errors(i, j), 1);
                }
            }
        }
    }

    #[test]
    fn operator_matches_channel() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let paths = sample_channel(&mut rng, 3, 30.0, 5.0).unwrap();
        let g = build_effective_channel(&paths, &p, &pb).unwrap();
        assert!(g.lg() <= 3 * (2 * p.q() + 1));
        for _ in 0..20 {
            let s: Vec<Complex64> = (0..p.frame_len()).map(|_| cn(&mut rng, 1.0)).collect();
            let a = g.apply(&s);
            let b = channel_symbol_rate(&s, &paths, &p, &pb).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn on_grid_path_is_permutation() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let g = build_effective_channel(
            &[PathParams {
                h: Complex64::new(1.0, 0.0),
                l: 5.0,
                k: 0.0,
            }],
            &p,
            &pb,
        )
        .unwrap();
        let mn = p.frame_len();
        for col in (0..mn).step_by(97) {
            for row in 0..mn {
                let want = if row == (col + 5) % mn { 1.0 } else { 0.0 };
                assert!((g.entry(row, col) - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sub_channel_is_lossless() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let paths = sample_channel(&mut rng, 2, 30.0, 5.0).unwrap();
        let g = build_effective_channel(&paths, &p, &pb).unwrap();
        let s: Vec<Complex64> = (0..p.frame_len()).map(|_| cn(&mut rng, 1.0)).collect();
        let full = g.apply(&s);
        for q in [0usize, 17, 500, p.frame_len() - 1] {
            let (cols, gq) = g.sub_channel(q);
            let sv = nalgebra::DVector::from_iterator(cols.len(), cols.iter().map(|&c| s[c]));
            let part = &gq * sv;
            for a in 0..g.lg() {
                assert!((part[a] - full[g.row(q, a)]).norm() < 1e-10);
            }
        }
    }

    fn frame_from(sym: &[usize], a: &Constellation, p: &SystemParams) -> DdFrame {
        DdFrame::from_vec(
            p.m(),
            p.n(),
            FrameRole::Data,
            sym.iter().map(|&i| a.points[i]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_channel_noiseless() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let a = Constellation::qam4();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sym = random_symbols(&mut rng, p.frame_len(), &a);
        let x = frame_from(&sym, &a, &p);
        let g = build_effective_channel(
            &[PathParams {
                h: Complex64::new(1.0, 0.0),
                l: 0.0,
                k: 0.0,
            }],
            &p,
            &pb,
        )
        .unwrap();
        let det = sic_mmse_detect(&x, &g, 0.0, &a, 1, None).unwrap();
        assert!(det.ridge_added);
        let all: Vec<usize> = (0..p.frame_len()).collect();
        assert_eq!(count_bit_errors(&sym, &det, &a, &all).0, 0);
    }

    #[test]
    fn perfect_csi_two_paths_and_variance_bound() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let a = Constellation::qam4();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let paths = [
            PathParams {
                h: Complex64::new(0.6, 0.3),
                l: 3.0,
                k: 2.0,
            },
            PathParams {
                h: Complex64::new(-0.2, 0.6),
                l: 11.0,
                k: -4.0,
            },
        ];
        let sigma2 = 0.01;
        let g = build_effective_channel(&paths, &p, &pb).unwrap();
        let sym = random_symbols(&mut rng, p.frame_len(), &a);
        let s = oddm_modulate(&frame_from(&sym, &a, &p));
        let mut r = channel_symbol_rate(&s, &paths, &p, &pb).unwrap();
        add_noise(&mut rng, &mut r, sigma2);
        let y = received_frame(&r, &p).unwrap();
        let det = sic_mmse_detect(&y, &g, sigma2, &a, 4, None).unwrap();
        let all: Vec<usize> = (0..p.frame_len()).collect();
        let (e, b) = count_bit_errors(&sym, &det, &a, &all);
        assert!(
            (e as f64) / (b as f64) < 1e-2,
            "ber {}",
            e as f64 / b as f64
        );
        assert!(det
            .beliefs
            .var
            .iter()
            .all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn global_phase_equivariance() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let a = Constellation::qam4();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let paths = sample_channel(&mut rng, 2, 20.0, 3.0).unwrap();
        let sym = random_symbols(&mut rng, p.frame_len(), &a);
        let s = oddm_modulate(&frame_from(&sym, &a, &p));
        let mut r = channel_symbol_rate(&s, &paths, &p, &pb).unwrap();
        add_noise(&mut rng, &mut r, 0.05);
        let y = received_frame(&r, &p).unwrap();
        let rot = Complex64::from_polar(1.0, 0.7);
        let yr = DdFrame::from_vec(
            p.m(),
            p.n(),
            FrameRole::Received,
            y.as_slice().iter().map(|z| z * rot).collect(),
        )
        .unwrap();
        let pr: Vec<PathParams> = paths
            .iter()
            .map(|q| PathParams { h: q.h * rot, ..*q })
            .collect();
        let d1 = sic_mmse_detect(
            &y,
            &build_effective_channel(&paths, &p, &pb).unwrap(),
            0.05,
            &a,
            2,
            None,
        )
        .unwrap();
        let d2 = sic_mmse_detect(
            &yr,
            &build_effective_channel(&pr, &p, &pb).unwrap(),
            0.05,
            &a,
            2,
            None,
        )
        .unwrap();
        for (u, v) in d1.beliefs.mean.iter().zip(&d2.beliefs.mean) {
            assert!((u - v).norm() < 1e-8);
        }
    }

    fn composite(pilot: &Pilot, sym: &[usize], a: &Constellation, p: &SystemParams) -> DdFrame {
        let mut x = pilot.frame.clone();
        for n in 1..p.n() {
            for m in 0..p.m() {
                x.set(m, n, a.points[sym[n * p.m() + m]]);
            }
        }
        x
    }

    #[test]
    fn jcedd_noiseless_single_path() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let a = Constellation::qam4();
        let pilot = build_pilot_frame(&p, PilotKind::DdSrnFmcw, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sym = random_symbols(&mut rng, p.frame_len(), &a);
        let x = composite(&pilot, &sym, &a, &p);
        let truth = [PathParams {
            h: Complex64::new(0.8, -0.6),
            l: 6.0,
            k: 2.0,
        }];
        let y = crate::channel::dd_response(&x, &truth, &p, &pb).unwrap();
        let cfg = JceddConfig {
            i_jcedd: 3,
            sensing: SensingConfig {
                p_max: 1,
                ..Default::default()
            },
        };
        let res = jcedd(&y, &pilot, 0.0, &a, &cfg, &p, &pb).unwrap();
        assert_eq!(res.paths.len(), 1);
        assert_eq!((res.paths[0].l, res.paths[0].k), (6.0, 2.0));
        assert!((res.paths[0].h - truth[0].h).norm() < 1e-6);
        let data: Vec<usize> = (p.m()..p.frame_len()).collect();
        assert_eq!(count_bit_errors(&sym, &res.detection, &a, &data).0, 0);
        // pilot column untouched
        for m in 0..p.m() {
            assert_eq!(res.detection.beliefs.mean[m], pilot.frame.get(m, 0));
        }
    }

    #[test]
    fn jcedd_vanishing_pilot_terminates() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let a = Constellation::qam4();
        let pilot = build_pilot_frame(&p, PilotKind::DdSrnFmcw, 1e-8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sym = random_symbols(&mut rng, p.frame_len(), &a);
        let x = composite(&pilot, &sym, &a, &p);
        let mut y = crate::channel::dd_response(
            &x,
            &[PathParams {
                h: Complex64::new(1.0, 0.0),
                l: 4.4,
                k: 1.3,
            }],
            &p,
            &pb,
        )
        .unwrap();
        add_noise(&mut rng, y.as_mut_slice(), 0.1);
        let cfg = JceddConfig {
            i_jcedd: 2,
            sensing: SensingConfig {
                p_max: 2,
                ..Default::default()
            },
        };
        let res = jcedd(&y, &pilot, 0.1, &a, &cfg, &p, &pb).unwrap();
        let data: Vec<usize> = (p.m()..p.frame_len()).collect();
        let (e, b) = count_bit_errors(&sym, &res.detection, &a, &data);
        assert!(e as f64 / b as f64 > 0.1);
    }

    #[test]
    fn detection_csv() {
        let p = params();
        let pb = PulseBank::from_params(&p);
        let a = Constellation::qam4();
        let x = frame_from(&vec![2; p.frame_len()], &a, &p);
        let g = build_effective_channel(
            &[PathParams {
                h: Complex64::new(1.0, 0.0),
                l: 0.0,
                k: 0.0,
            }],
            &p,
            &pb,
        )
        .unwrap();
        let det = sic_mmse_detect(&x, &g, 0.01, &a, 1, None).unwrap();
        let mut buf = Vec::new();
        write_detection_csv(&mut buf, 0, &det, &a).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.lines().nth(1).unwrap().ends_with(",10"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn soft_symbol_moments(re in -2.0f64..2.0, im in -2.0f64..2.0, nv in 1e-3f64..10.0) {
            let a = Constellation::qam4();
            let (mean, var, _) = soft_symbol(Complex64::new(re, im), nv, &a);
            prop_assert!(mean.re.abs() <= 1.0 / 2f64.sqrt() + 1e-12);
            prop_assert!(mean.im.abs() <= 1.0 / 2f64.sqrt() + 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&var));
        }
    }
}
