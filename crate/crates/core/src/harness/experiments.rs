//! One runner per experiment kind. Each trial draws from its own stream so
//! results do not depend on the thread count.

use super::config::{ExperimentConfig, ExperimentKind};
use super::metrics::{mean_stderr, nmse_vs_virtual_ddip, root_mean_stderr, squared_errors};
use super::output::{q, CurvePoint, Quantity, Table};
use crate::analysis::ambiguity::{
    ambiguity_dd_approx, ambiguity_numeric, default_grid, off_axis_peak_db, pilot_train,
};
use crate::analysis::crb::{crb, Theta};
use crate::analysis::marcum::ccdf_analytic;
use crate::analysis::papr::{
    analytic_crossing_db, empirical_ccdf, empirical_crossing_db, frame_papr,
};
use crate::analysis::psd::{linear_fmcw_waveform, Periodogram, PsdModel};
use crate::channel::{add_noise, dd_response, dd_response_fast, sample_channel, PathParams};
use crate::chirp::{build_pilot_frame, Pilot, PilotKind};
use crate::detection::{
    build_effective_channel, count_bit_errors, jcedd, sic_mmse_detect, Constellation, JceddConfig,
    KnownSymbols,
};
use crate::error::Result;
use crate::frame::{composite, data_frame, data_positions, data_symbol_energy, random_labels};
use crate::modem::{oddm_modulate, pulse_span, synthesize_waveform, Waveform};
use crate::params::{
    db_to_lin, lin_to_db, split_power, unit_data_power, DdFrame, PowerAllocation, SystemParams,
};
use crate::pulses::{dirichlet, PulseBank};
use crate::rng::trial_rng;
use crate::sensing::{das, dd_compress, omp_grid_evolution};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const ESN0: Quantity = q("esn0", "dB");
const RHO: Quantity = q("rho", "dB");
const SNR: Quantity = q("snr", "dB");

/// Samples keyed by `(series, metric, point)`.
type Key = (String, &'static str, usize);

#[derive(Default)]
struct Samples(BTreeMap<Key, Vec<f64>>);

impl Samples {
    fn values(&self, series: &str, metric: &str, point: usize) -> &[f64] {
        self.0
            .iter()
            .find(|((s, m, p), _)| s == series && *m == metric && *p == point)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    }
}

enum Agg {
    Mean,
    /// Root of the mean over the given span.
    RootMean(f64),
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    p: SystemParams,
    pb: PulseBank,
    hash: String,
}

impl Ctx<'_> {
    fn rng(&self, trial: usize) -> ChaCha8Rng {
        trial_rng(self.cfg.seed, self.cfg.kind.name(), 0, trial)
    }

    fn point(
        &self,
        xq: Quantity,
        x: f64,
        series: &str,
        metric: Quantity,
        mean: f64,
        stderr: f64,
        trials: usize,
    ) -> CurvePoint {
        CurvePoint {
            x_quantity: xq,
            x,
            y: None,
            series: series.to_string(),
            metric,
            mean,
            stderr,
            trials,
            params_hash: self.hash.clone(),
        }
    }

    /// Run `f` for every trial and gather the keyed samples in trial order.
    fn trials<F>(&self, f: F) -> Result<Samples>
    where
        F: Fn(usize) -> Result<Vec<(Key, f64)>> + Sync + Send,
    {
        let idx: Vec<usize> = (0..self.cfg.trials).collect();
        let mut s = Samples::default();
        for r in crate::par::map(&idx, |&t| f(t)) {
            for (k, v) in r? {
                s.0.entry(k).or_default().push(v);
            }
        }
        Ok(s)
    }

    /// One row per sample key whose metric is `metric`.
    fn emit(
        &self,
        t: &mut Table,
        s: &Samples,
        metric: &str,
        mq: Quantity,
        xq: Quantity,
        xs: &[f64],
        agg: &Agg,
    ) {
        for ((series, m, pt), v) in &s.0 {
            if *m != metric {
                continue;
            }
            let (mean, se) = match agg {
                Agg::Mean => mean_stderr(v),
                Agg::RootMean(span) => root_mean_stderr(v, *span),
            };
            t.rows
                .push(self.point(xq, xs[*pt], series, mq, mean, se, v.len()));
        }
    }
}

/// Shared per-trial draws: channel, data labels and unit-variance noise.
struct Draw {
    paths: Vec<PathParams>,
    labels: Vec<usize>,
    noise: Vec<Complex64>,
}

fn draw(ctx: &Ctx, trial: usize, a: &Constellation) -> Result<Draw> {
    let mut rng = ctx.rng(trial);
    let (m, n) = (ctx.p.m(), ctx.p.n());
    let paths = sample_channel(
        &mut rng,
        ctx.cfg.channel.paths,
        ctx.cfg.l_span(),
        ctx.cfg.k_max(),
    )?;
    let labels = random_labels(&mut rng, m, n, a);
    let mut noise = vec![Complex64::new(0.0, 0.0); m * n];
    add_noise(&mut rng, &mut noise, 1.0);
    Ok(Draw {
        paths,
        labels,
        noise,
    })
}

fn received(
    ctx: &Ctx,
    x: &DdFrame,
    paths: &[PathParams],
    noise: &[Complex64],
    sigma2: f64,
) -> Result<DdFrame> {
    let mut y = dd_response_fast(x, paths, &ctx.p, &ctx.pb)?;
    let s = sigma2.sqrt();
    for (v, w) in y.as_mut_slice().iter_mut().zip(noise) {
        *v += w * s;
    }
    Ok(y)
}

fn composite_name(kind: PilotKind) -> &'static str {
    match kind {
        PilotKind::DdSrnFmcw => "oddm_fmcw",
        PilotKind::Ddip => "oddm_ddip",
    }
}

/// Constellation scaled to data power `e_s` per time-domain sample.
fn scaled(ctx: &Ctx, a: &Constellation, e_s: f64) -> Constellation {
    a.scaled(data_symbol_energy(e_s, ctx.p.n()).sqrt())
}

/// Sweep point: axis value, power split and noise variance.
struct Operating {
    x: f64,
    alloc: PowerAllocation,
    sigma2: f64,
}

fn operating_points(ctx: &Ctx) -> Result<(Quantity, Vec<Operating>)> {
    let cfg = ctx.cfg;
    match cfg.kind {
        ExperimentKind::BerVsRho | ExperimentKind::NrmseVsRho => {
            let sigma2 = db_to_lin(-cfg.total_snr_db);
            let pts = cfg
                .rho_db
                .iter()
                .map(|&r| {
                    Ok(Operating {
                        x: r,
                        alloc: split_power(db_to_lin(r), 1.0)?,
                        sigma2,
                    })
                })
                .collect::<Result<_>>()?;
            Ok((RHO, pts))
        }
        _ => {
            let alloc = unit_data_power(db_to_lin(cfg.cdpr_db))?;
            let pts = cfg
                .esn0_db
                .iter()
                .map(|&x| Operating {
                    x,
                    alloc,
                    sigma2: alloc.e_s * db_to_lin(-x),
                })
                .collect();
            Ok((ESN0, pts))
        }
    }
}

pub(super) fn run(cfg: &ExperimentConfig, hash: String) -> Result<Vec<Table>> {
    let ctx = Ctx {
        cfg,
        p: cfg.params.clone(),
        pb: PulseBank::from_params(&cfg.params),
        hash,
    };
    match cfg.kind {
        ExperimentKind::PaprCcdf => papr(&ctx),
        ExperimentKind::Psd => psd(&ctx),
        ExperimentKind::Ambiguity => ambiguity(&ctx),
        ExperimentKind::ChirpCompression => compression(&ctx),
        ExperimentKind::BerVsEsn0 | ExperimentKind::BerVsRho | ExperimentKind::NmseVsEsn0 => {
            link(&ctx)
        }
        ExperimentKind::NrmseVsEsn0 | ExperimentKind::NrmseVsRho => sensing(&ctx),
        ExperimentKind::Crb => bounds(&ctx),
    }
}

const TAIL_LEVELS: [(f64, &str); 2] = [(1e-2, "papr_at_ccdf_1e-2"), (1e-3, "papr_at_ccdf_1e-3")];

/// Quantile standard error from the spread of neighbouring order statistics.
fn crossing_stderr(v: &[f64], level: f64) -> Result<f64> {
    let n = v.len() as f64;
    let d = (level * (1.0 - level) / n).sqrt();
    let lo = (level - d).max(1.0 / n);
    let hi = (level + d).min(1.0);
    Ok(0.5 * (empirical_crossing_db(v, lo)? - empirical_crossing_db(v, hi)?).abs())
}

fn papr(ctx: &Ctx) -> Result<Vec<Table>> {
    let cfg = ctx.cfg;
    let (m, n) = (ctx.p.m(), ctx.p.n());
    let a = Constellation::preset(&cfg.constellation)?;
    let rhos: Vec<f64> = cfg.rho_db.iter().map(|&r| db_to_lin(r)).collect();
    let pilots: Vec<Vec<Pilot>> = cfg
        .pilots
        .iter()
        .map(|&k| {
            rhos.iter()
                .map(|&r| build_pilot_frame(&ctx.p, k, unit_data_power(r)?.e_c))
                .collect()
        })
        .collect::<Result<_>>()?;
    let ad = scaled(ctx, &a, 1.0);
    let s = ctx.trials(|t| {
        let mut rng = ctx.rng(t);
        let xd = data_frame(&random_labels(&mut rng, m, n, &ad), &ad, m, n)?;
        let mut out = Vec::new();
        for (kind, row) in cfg.pilots.iter().zip(&pilots) {
            for (i, pilot) in row.iter().enumerate() {
                let v = frame_papr(&composite(pilot, &xd)?, &ctx.p, &ctx.pb)?;
                out.push(((composite_name(*kind).to_string(), "papr", i), v));
            }
        }
        Ok(out)
    })?;

    let mut ccdf = Table::new("papr_ccdf");
    let mut tail = Table::new("papr_tail");
    let mut mean = Table::new("papr_mean");
    let gq = q("gamma0", "dB");
    let cq = q("ccdf", "-");
    let pq = q("papr", "dB");
    for (kind, _) in cfg.pilots.iter().zip(&pilots) {
        let name = composite_name(*kind);
        let series = format!("{name}/simulated");
        for (i, &rho_db) in cfg.rho_db.iter().enumerate() {
            let v = s.values(name, "papr", i);
            let emp = empirical_ccdf(v, &cfg.gamma0_db);
            for (&g, &pr) in cfg.gamma0_db.iter().zip(&emp) {
                let se = (pr * (1.0 - pr) / v.len() as f64).sqrt();
                let mut row = ctx.point(gq, g, &series, cq, pr, se, v.len());
                row.y = Some((RHO, rho_db));
                ccdf.rows.push(row);
            }
            if *kind == PilotKind::DdSrnFmcw {
                for &g in &cfg.gamma0_db {
                    let mut row = ctx.point(
                        gq,
                        g,
                        &format!("{name}/analytic"),
                        cq,
                        ccdf_analytic(rhos[i], m * n, db_to_lin(g)),
                        0.0,
                        0,
                    );
                    row.y = Some((RHO, rho_db));
                    ccdf.rows.push(row);
                }
            }
            let (mu, se) = mean_stderr(v);
            mean.rows
                .push(ctx.point(RHO, rho_db, &series, q("papr_mean", "dB"), mu, se, v.len()));
            for (level, metric) in TAIL_LEVELS {
                let mq = q(metric, "dB");
                let e = empirical_crossing_db(v, level)?;
                tail.rows.push(ctx.point(
                    RHO,
                    rho_db,
                    &series,
                    mq,
                    e,
                    crossing_stderr(v, level)?,
                    v.len(),
                ));
                if *kind == PilotKind::DdSrnFmcw {
                    let an = analytic_crossing_db(rhos[i], m * n, level);
                    tail.rows.push(ctx.point(
                        RHO,
                        rho_db,
                        &format!("{name}/analytic"),
                        mq,
                        an,
                        0.0,
                        0,
                    ));
                }
            }
        }
        // pilot alone does not depend on data or rho
        let alone = frame_papr(
            &build_pilot_frame(&ctx.p, *kind, 1.0)?.frame,
            &ctx.p,
            &ctx.pb,
        )?;
        for &rho_db in &cfg.rho_db {
            mean.rows.push(ctx.point(
                RHO,
                rho_db,
                &format!("{}/pilot-only", kind.name()),
                pq,
                alone,
                0.0,
                0,
            ));
        }
    }
    Ok(vec![ccdf, tail, mean])
}

/// Mean periodogram level over `lo <= |f| <= hi`, in dB.
fn band_level_db(freqs: &[f64], psd: &[f64], lo: f64, hi: f64) -> f64 {
    let (mut sum, mut cnt) = (0.0, 0usize);
    for (f, v) in freqs.iter().zip(psd) {
        if (lo..=hi).contains(&f.abs()) {
            sum += v;
            cnt += 1;
        }
    }
    lin_to_db(sum / cnt.max(1) as f64)
}

/// Band edges for the out-of-band level, in units of `M / T`.
pub const OOBE_WINDOW: (f64, f64) = (0.74, 0.76);

fn psd(ctx: &Ctx) -> Result<Vec<Table>> {
    let cfg = ctx.cfg;
    let p = &ctx.p;
    let (m, n) = (p.m(), p.n());
    let a = Constellation::preset(&cfg.constellation)?;
    let alloc = split_power(db_to_lin(cfg.cdpr_db), 1.0)?;
    let ad = scaled(ctx, &a, alloc.e_s);
    let span = pulse_span(p);
    let fs = p.o() as f64 / p.delay_resolution();
    let rate = m as f64 / p.t();
    let len = synthesize_waveform(
        &vec![Complex64::new(0.0, 0.0); m * n],
        p,
        &ctx.pb,
        false,
        span,
    )?
    .samples
    .len();
    let nfft = len.next_power_of_two();
    let fq = q("f", "Hz");
    let dq = q("psd", "J/Hz");
    let inband = (1.0 - p.beta()) * rate / 2.0;
    let (w_lo, w_hi) = (OOBE_WINDOW.0 * rate, OOBE_WINDOW.1 * rate);

    let mut spec = Table::new("psd");
    let mut summary = Table::new("psd_summary");
    let x0 = cfg.cdpr_db;
    // absolute level in the window and level relative to the in-band mean
    let oobe = |f: &[f64], v: &[f64]| {
        let o = band_level_db(f, v, w_lo, w_hi);
        [
            ("oobe", o),
            ("oobe_rel", o - band_level_db(f, v, 0.0, inband)),
        ]
    };
    let add_curve = |t: &mut Table, pg: &Periodogram, series: &str| {
        let (mu, se) = (pg.mean(), pg.stderr());
        for (i, &f) in pg.freqs.iter().enumerate() {
            if f.abs() <= rate {
                t.rows
                    .push(ctx.point(fq, f, series, dq, mu[i], se[i], pg.frames));
            }
        }
    };

    for &kind in &cfg.pilots {
        let pilot = build_pilot_frame(p, kind, alloc.e_c)?;
        let model = PsdModel::new(p, &pilot, alloc.e_s)?;
        let name = composite_name(kind);
        let mut pg = Periodogram::new(fs, nfft, m * n)?;
        let idx: Vec<usize> = (0..cfg.trials).collect();
        for chunk in idx.chunks(32) {
            let ws: Vec<Result<Waveform>> = crate::par::map(chunk, |&t| {
                let mut rng = ctx.rng(t);
                let xd = data_frame(&random_labels(&mut rng, m, n, &ad), &ad, m, n)?;
                synthesize_waveform(
                    &oddm_modulate(&composite(&pilot, &xd)?),
                    p,
                    &ctx.pb,
                    false,
                    span,
                )
            });
            for w in ws {
                pg.push(&w?)?;
            }
        }
        add_curve(&mut spec, &pg, &format!("{name}/periodogram"));
        let mut dev = 0.0f64;
        let mu = pg.mean();
        for (i, &f) in pg.freqs.iter().enumerate() {
            let v = model.eval(f);
            if f.abs() <= rate {
                for (part, val) in [("total", v.total), ("pilot", v.pilot), ("data", v.data)] {
                    spec.rows.push(ctx.point(
                        fq,
                        f,
                        &format!("{name}/analytic-{part}"),
                        dq,
                        val,
                        0.0,
                        0,
                    ));
                }
            }
            if f.abs() <= inband {
                dev = dev.max((lin_to_db(mu[i]) - lin_to_db(v.total)).abs());
            }
        }
        let sq = |s: &str, metric: &'static str, units: &'static str, v: f64, trials: usize| {
            ctx.point(RHO, x0, s, q(metric, units), v, 0.0, trials)
        };
        summary.rows.push(sq(
            &format!("{name}/analytic"),
            "integral",
            "J",
            model.integrate(20_000),
            0,
        ));
        summary.rows.push(sq(
            &format!("{name}/analytic"),
            "power",
            "J",
            alloc.e_c + alloc.e_s,
            0,
        ));
        summary.rows.push(sq(
            &format!("{name}/periodogram"),
            "inband_max_dev",
            "dB",
            dev,
            pg.frames,
        ));
        for (metric, v) in oobe(&pg.freqs, &mu) {
            summary.rows.push(sq(
                &format!("{name}/periodogram"),
                metric,
                "dB",
                v,
                pg.frames,
            ));
        }

        // unit-power pilot alone
        let alone = build_pilot_frame(p, kind, 1.0)?;
        let mut pa = Periodogram::new(fs, nfft, m * n)?;
        pa.push(&synthesize_waveform(
            &oddm_modulate(&alone.frame),
            p,
            &ctx.pb,
            false,
            span,
        )?)?;
        add_curve(&mut spec, &pa, &format!("{}/periodogram", kind.name()));
        for (metric, v) in oobe(&pa.freqs, &pa.mean()) {
            summary.rows.push(sq(
                &format!("{}/periodogram", kind.name()),
                metric,
                "dB",
                v,
                1,
            ));
        }
    }
    let mut lin = Periodogram::new(fs, nfft, m * n)?;
    lin.push(&linear_fmcw_waveform(m, n, p.t(), p.o()))?;
    add_curve(&mut spec, &lin, "linear_fmcw/periodogram");
    for (metric, v) in oobe(&lin.freqs, &lin.mean()) {
        summary.rows.push(ctx.point(
            RHO,
            x0,
            "linear_fmcw/periodogram",
            q(metric, "dB"),
            v,
            0.0,
            1,
        ));
    }
    Ok(vec![spec, summary])
}

fn ambiguity(ctx: &Ctx) -> Result<Vec<Table>> {
    let p = &ctx.p;
    let ac = &ctx.cfg.ambiguity;
    let (t, dt) = (p.t(), p.delay_resolution());
    let dnu = p.doppler_resolution();
    let span = pulse_span(p);
    let tx = pilot_train(p, &ctx.pb, true, span)?;
    let rf = pilot_train(p, &ctx.pb, false, span)?;
    let (taus, nus) = default_grid(
        p,
        ac.tau_span * t,
        ac.nu_span / t,
        ac.tau_oversample,
        ac.nu_oversample,
    );
    let surf = ambiguity_numeric(&tx, &rf, &taus, &nus)?;
    let i0 = taus
        .iter()
        .position(|&v| v == 0.0)
        .expect("grid is symmetric");
    let j0 = nus
        .iter()
        .position(|&v| v == 0.0)
        .expect("grid is symmetric");
    let a0 = surf[i0][j0];
    let peak = a0.norm();
    let c = crate::chirp::make_chirp(p.m())?;
    let approx0 = ambiguity_dd_approx(0.0, 0.0, p, &c, &ctx.pb);

    let tq = q("tau", "s");
    let nq = q("nu", "Hz");
    let db = q("af", "dB");
    let mut surface = Table::new("ambiguity");
    let mut approx_dev = 0.0f64;
    let floor = |v: f64| if v > 0.0 { 20.0 * v.log10() } else { -300.0 };
    for (i, &tau) in taus.iter().enumerate() {
        for (j, &nu) in nus.iter().enumerate() {
            let mut row = ctx.point(
                tq,
                tau,
                "dd_srn_fmcw/numeric",
                db,
                floor(surf[i][j].norm() / peak),
                0.0,
                1,
            );
            row.y = Some((nq, nu));
            surface.rows.push(row);
            let ap = ambiguity_dd_approx(tau, nu, p, &c, &ctx.pb) / approx0.norm();
            approx_dev = approx_dev.max((ap - surf[i][j] / peak).norm());
        }
    }

    let mut cuts = Table::new("ambiguity_cuts");
    let (re, im, ab) = (q("af_re", "-"), q("af_im", "-"), q("af_abs", "-"));
    let mut delay_dev = 0.0f64;
    for (i, &tau) in taus.iter().enumerate() {
        let r = surf[i][j0] / a0;
        let g = ctx.pb.rc(tau);
        cuts.rows
            .push(ctx.point(tq, tau, "numeric/delay-cut", re, r.re, 0.0, 1));
        cuts.rows
            .push(ctx.point(tq, tau, "numeric/delay-cut", im, r.im, 0.0, 1));
        cuts.rows
            .push(ctx.point(tq, tau, "theory/delay-cut", re, g, 0.0, 0));
        if tau.abs() < t / 4.0 {
            delay_dev = delay_dev.max((r - g).norm());
        }
    }
    let mut doppler_dev = 0.0f64;
    for (j, &nu) in nus.iter().enumerate() {
        let r = surf[i0][j].norm() / peak;
        let phi = dirichlet(-nu * p.n() as f64 * t, p.n()).norm();
        cuts.rows
            .push(ctx.point(nq, nu, "numeric/doppler-cut", ab, r, 0.0, 1));
        cuts.rows
            .push(ctx.point(nq, nu, "theory/doppler-cut", ab, phi, 0.0, 0));
        if nu.abs() <= 1.0 / (4.0 * t) {
            doppler_dev = doppler_dev.max((r - phi).abs());
        }
    }

    let off = off_axis_peak_db(
        &surf,
        &taus,
        &nus,
        ac.tau_guard_bins * dt,
        ac.nu_guard_bins * dnu,
        peak,
    );
    let mq = q("m", "-");
    let x = p.m() as f64;
    let mut summary = Table::new("ambiguity_summary");
    for (metric, units, v) in [
        ("off_axis_peak", "dB", off),
        ("delay_cut_max_dev", "-", delay_dev),
        ("doppler_cut_max_dev", "-", doppler_dev),
        ("approx_max_dev", "-", approx_dev),
    ] {
        summary
            .rows
            .push(ctx.point(mq, x, "dd_srn_fmcw", q(metric, units), v, 0.0, 1));
    }
    Ok(vec![surface, cuts, summary])
}

fn compression(ctx: &Ctx) -> Result<Vec<Table>> {
    let p = &ctx.p;
    let (m, n) = (p.m(), p.n());
    let pilot = build_pilot_frame(p, PilotKind::DdSrnFmcw, 1.0)?;
    let path = PathParams {
        h: Complex64::new(1.0, 0.0),
        l: ctx.cfg.path_l,
        k: ctx.cfg.path_k,
    };
    let y = dd_response(&pilot.frame, &[path], p, &ctx.pb)?;
    let d = dd_compress(&y, &pilot.reference)?;
    let scale = m as f64 * (n as f64 * pilot.e_c).sqrt();
    let signed = |i: usize, len: usize| {
        if i > len / 2 {
            i as f64 - len as f64
        } else {
            i as f64
        }
    };

    let lq = q("delay", "bins");
    let kq = q("doppler", "bins");
    let mut surface = Table::new("compression");
    let mut peak = 0.0f64;
    for md in 0..m {
        for k in 0..n {
            let v = d.get(md, k).norm();
            peak = peak.max(v);
            let mut row = ctx.point(lq, md as f64, "dd_srn_fmcw", q("ddr_abs", "-"), v, 0.0, 1);
            row.y = Some((kq, signed(k, n)));
            surface.rows.push(row);
        }
    }
    let col = path.k.round().rem_euclid(n as f64) as usize;
    let mut cut = Table::new("compression_cut");
    for md in 0..m {
        let v = d.get(md, col);
        let off = signed(md, m) - path.l;
        // cyclic delay offset folded into (-M/2, M/2]
        let off = off - m as f64 * (off / m as f64).round();
        cut.rows
            .push(ctx.point(lq, md as f64, "simulated", q("ddr_re", "-"), v.re, 0.0, 1));
        cut.rows
            .push(ctx.point(lq, md as f64, "simulated", q("ddr_im", "-"), v.im, 0.0, 1));
        cut.rows.push(ctx.point(
            lq,
            md as f64,
            "simulated",
            q("ddr_abs", "-"),
            v.norm(),
            0.0,
            1,
        ));
        cut.rows.push(ctx.point(
            lq,
            md as f64,
            "theory",
            q("ddr_abs", "-"),
            scale * ctx.pb.rc_bins(off).abs(),
            0.0,
            0,
        ));
    }
    let mut summary = Table::new("compression_summary");
    summary
        .rows
        .push(ctx.point(lq, path.l, "simulated", q("peak", "-"), peak, 0.0, 1));
    summary
        .rows
        .push(ctx.point(lq, path.l, "theory", q("peak", "-"), scale, 0.0, 0));
    Ok(vec![surface, cut, summary])
}

/// Detection and channel-estimation runs on the composite frame.
fn link(ctx: &Ctx) -> Result<Vec<Table>> {
    let cfg = ctx.cfg;
    let p = &ctx.p;
    let (m, n) = (p.m(), p.n());
    let a = Constellation::preset(&cfg.constellation)?;
    let (xq, pts) = operating_points(ctx)?;
    let detect = cfg.kind != ExperimentKind::NmseVsEsn0;
    let perfect = detect && cfg.perfect_csi;
    let positions = data_positions(m, n);
    let jc = JceddConfig {
        i_jcedd: cfg.i_jcedd,
        sensing: cfg.sensing,
    };
    let none = build_pilot_frame(p, PilotKind::DdSrnFmcw, 0.0)?;

    let s = ctx.trials(|t| {
        let d = draw(ctx, t, &a)?;
        let mut out = Vec::new();
        let g = if perfect {
            Some(build_effective_channel(&d.paths, p, &ctx.pb)?)
        } else {
            None
        };
        for (i, op) in pts.iter().enumerate() {
            let ad = scaled(ctx, &a, op.alloc.e_s);
            let xd = data_frame(&d.labels, &ad, m, n)?;
            if let Some(g) = &g {
                let y = received(ctx, &xd, &d.paths, &d.noise, op.sigma2)?;
                let det = sic_mmse_detect(
                    &y,
                    g,
                    op.sigma2,
                    &ad,
                    cfg.i_det,
                    Some(KnownSymbols::pilot_column(&none)),
                )?;
                let (e, b) = count_bit_errors(&d.labels, &det, &ad, &positions);
                out.push((("perfect_csi".to_string(), "ber", i), e as f64 / b as f64));
            }
            for &kind in &cfg.pilots {
                let pilot = build_pilot_frame(p, kind, op.alloc.e_c)?;
                let y = received(ctx, &composite(&pilot, &xd)?, &d.paths, &d.noise, op.sigma2)?;
                let r = jcedd(&y, &pilot, op.sigma2, &ad, &jc, p, &ctx.pb)?;
                let series = format!("{}/jcedd", composite_name(kind));
                if detect {
                    let (e, b) = count_bit_errors(&d.labels, &r.detection, &ad, &positions);
                    out.push(((series.clone(), "ber", i), e as f64 / b as f64));
                }
                out.push((
                    (series, "nmse", i),
                    nmse_vs_virtual_ddip(&r.paths, &d.paths, p, &ctx.pb)?,
                ));
                if cfg.baselines && !detect {
                    let y = received(ctx, &pilot.frame, &d.paths, &d.noise, op.sigma2)?;
                    let est = omp_grid_evolution(&y, &pilot, &cfg.sensing, p, &ctx.pb)?.paths;
                    let series = format!("{}/omp", kind.name());
                    out.push((
                        (series, "nmse", i),
                        nmse_vs_virtual_ddip(&est, &d.paths, p, &ctx.pb)?,
                    ));
                }
            }
        }
        Ok(out)
    })?;
    let xs: Vec<f64> = pts.iter().map(|o| o.x).collect();
    let mut tables = Vec::new();
    if detect {
        let mut t = Table::new("ber");
        ctx.emit(&mut t, &s, "ber", q("ber", "-"), xq, &xs, &Agg::Mean);
        tables.push(t);
    }
    let mut t = Table::new("nmse");
    ctx.emit(&mut t, &s, "nmse", q("nmse", "-"), xq, &xs, &Agg::Mean);
    tables.push(t);
    Ok(tables)
}

/// Path-averaged delay and Doppler bounds in bins².
fn mean_bounds(paths: &[PathParams], x: &DdFrame, sigma2: f64, ctx: &Ctx) -> Result<(f64, f64)> {
    let c = crb(paths, x, sigma2, &ctx.p, &ctx.pb)?;
    let np = c.paths() as f64;
    let l = (0..c.paths()).map(|i| c.get(i, Theta::Delay)).sum::<f64>() / np;
    let k = (0..c.paths())
        .map(|i| c.get(i, Theta::Doppler))
        .sum::<f64>()
        / np;
    Ok((l, k))
}

fn nrmse_tables(
    ctx: &Ctx,
    s: &Samples,
    xq: Quantity,
    xs: &[f64],
    names: (&str, &str),
) -> Vec<Table> {
    let (ls, ks) = (ctx.cfg.l_span(), 2.0 * ctx.cfg.k_max());
    let mut td = Table::new(names.0);
    ctx.emit(
        &mut td,
        s,
        "delay_sq",
        q("nrmse", "-"),
        xq,
        xs,
        &Agg::RootMean(ls),
    );
    let mut tk = Table::new(names.1);
    ctx.emit(
        &mut tk,
        s,
        "doppler_sq",
        q("nrmse", "-"),
        xq,
        xs,
        &Agg::RootMean(ks),
    );
    vec![td, tk]
}

/// Data-aided sensing on the composite frame, with optional pilot-only
/// pursuit and bounds.
fn sensing(ctx: &Ctx) -> Result<Vec<Table>> {
    let cfg = ctx.cfg;
    let p = &ctx.p;
    let (m, n) = (p.m(), p.n());
    let a = Constellation::preset(&cfg.constellation)?;
    let (xq, pts) = operating_points(ctx)?;
    let (ls, ks) = (cfg.l_span(), 2.0 * cfg.k_max());
    let s = ctx.trials(|t| {
        let d = draw(ctx, t, &a)?;
        let mut out = Vec::new();
        let mut push = |series: String, i: usize, (sl, sk): (f64, f64)| {
            out.push(((series.clone(), "delay_sq", i), sl));
            out.push(((series, "doppler_sq", i), sk));
        };
        for (i, op) in pts.iter().enumerate() {
            let ad = scaled(ctx, &a, op.alloc.e_s);
            let xd = data_frame(&d.labels, &ad, m, n)?;
            for &kind in &cfg.pilots {
                let pilot = build_pilot_frame(p, kind, op.alloc.e_c)?;
                let x = composite(&pilot, &xd)?;
                let y = received(ctx, &x, &d.paths, &d.noise, op.sigma2)?;
                let est = das(&y, &pilot, &xd, &cfg.sensing, p, &ctx.pb)?.paths;
                push(
                    format!("{}/das", composite_name(kind)),
                    i,
                    squared_errors(&est, &d.paths, ls, ks),
                );
                if cfg.baselines {
                    let y = received(ctx, &pilot.frame, &d.paths, &d.noise, op.sigma2)?;
                    let est = omp_grid_evolution(&y, &pilot, &cfg.sensing, p, &ctx.pb)?.paths;
                    push(
                        format!("{}/omp", kind.name()),
                        i,
                        squared_errors(&est, &d.paths, ls, ks),
                    );
                    push(
                        format!("{}/crb-frame", composite_name(kind)),
                        i,
                        mean_bounds(&d.paths, &x, op.sigma2, ctx)?,
                    );
                }
                push(
                    format!("{}/crb-pilot", kind.name()),
                    i,
                    mean_bounds(&d.paths, &pilot.frame, op.sigma2, ctx)?,
                );
            }
        }
        Ok(out)
    })?;
    let xs: Vec<f64> = pts.iter().map(|o| o.x).collect();
    Ok(nrmse_tables(
        ctx,
        &s,
        xq,
        &xs,
        ("nrmse_delay", "nrmse_doppler"),
    ))
}

/// Pilot-only bounds at total SNR and at per-path SNR.
fn bounds(ctx: &Ctx) -> Result<Vec<Table>> {
    let cfg = ctx.cfg;
    let p = &ctx.p;
    let a = Constellation::preset(&cfg.constellation)?;
    let pilots: Vec<Pilot> = cfg
        .pilots
        .iter()
        .map(|&k| build_pilot_frame(p, k, 1.0))
        .collect::<Result<_>>()?;
    let s = ctx.trials(|t| {
        let d = draw(ctx, t, &a)?;
        let mut out = Vec::new();
        for (i, &snr) in cfg.esn0_db.iter().enumerate() {
            let sigma2 = db_to_lin(-snr);
            for pilot in &pilots {
                let (l, k) = mean_bounds(&d.paths, &pilot.frame, sigma2, ctx)?;
                let series = format!("{}/total-snr", pilot.kind.name());
                out.push(((series.clone(), "delay_sq", i), l));
                out.push(((series, "doppler_sq", i), k));
                let (mut pl, mut pk) = (0.0, 0.0);
                for path in &d.paths {
                    let (l, k) = mean_bounds(
                        std::slice::from_ref(path),
                        &pilot.frame,
                        sigma2 * path.h.norm_sqr(),
                        ctx,
                    )?;
                    pl += l;
                    pk += k;
                }
                let np = d.paths.len() as f64;
                let series = format!("{}/per-path-snr", pilot.kind.name());
                out.push(((series.clone(), "delay_sq", i), pl / np));
                out.push(((series, "doppler_sq", i), pk / np));
            }
        }
        Ok(out)
    })?;
    Ok(nrmse_tables(
        ctx,
        &s,
        SNR,
        &cfg.esn0_db,
        ("crb_delay", "crb_doppler"),
    ))
}
