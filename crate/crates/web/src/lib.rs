//! Browser bindings for three interactive views: PAPR CCDF, pilot ambiguity
//! surface and transmit PSD. Everything runs single-threaded.

use ddfmcw::analysis::ambiguity::{ambiguity_numeric, default_grid, pilot_train};
use ddfmcw::analysis::marcum::ccdf_analytic;
use ddfmcw::analysis::papr::{empirical_ccdf, frame_papr};
use ddfmcw::analysis::psd::PsdModel;
use ddfmcw::chirp::{build_pilot_frame, PilotKind};
use ddfmcw::detection::Constellation;
use ddfmcw::frame::{composite, data_frame, data_symbol_energy, random_labels};
use ddfmcw::params::{db_to_lin, unit_data_power, SystemParams};
use ddfmcw::pulses::PulseBank;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const MAX_CELLS: usize = 4096;

type Res<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn js<T>(r: Res<T>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

fn grid(m: usize, n: usize) -> Res<SystemParams> {
    if m * n > MAX_CELLS {
        return Err(err(format!("M*N must be at most {MAX_CELLS}")));
    }
    let p = SystemParams::desk().with_q(8).map_err(err)?;
    let p = p.with_grid(m, n).map_err(err)?;
    p.with_l_max((m / 2).max(1)).map_err(err)
}

fn pilot_kind(name: &str) -> Res<PilotKind> {
    match name {
        "fmcw" => Ok(PilotKind::DdSrnFmcw),
        "ddip" => Ok(PilotKind::Ddip),
        _ => Err(err(format!("unknown pilot '{name}'"))),
    }
}

/// Closed-form CCDF of the composite frame PAPR at each threshold (dB).
#[wasm_bindgen]
pub fn ccdf_analytic_curve(rho_db: f64, m: usize, n: usize, gamma_db: &[f64]) -> Vec<f64> {
    let rho = db_to_lin(rho_db);
    gamma_db
        .iter()
        .map(|&g| ccdf_analytic(rho, m * n, db_to_lin(g)))
        .collect()
}

/// Empirical CCDF over `trials` random QPSK frames with the given pilot.
#[wasm_bindgen]
pub fn ccdf_simulated_curve(
    pilot: &str,
    rho_db: f64,
    m: usize,
    n: usize,
    trials: usize,
    seed: u64,
    gamma_db: &[f64],
) -> Result<Vec<f64>, JsError> {
    js(ccdf_simulated_curve_impl(
        pilot, rho_db, m, n, trials, seed, gamma_db,
    ))
}

fn ccdf_simulated_curve_impl(
    pilot: &str,
    rho_db: f64,
    m: usize,
    n: usize,
    trials: usize,
    seed: u64,
    gamma_db: &[f64],
) -> Res<Vec<f64>> {
    let p = grid(m, n)?;
    let pb = PulseBank::from_params(&p);
    let alloc = unit_data_power(db_to_lin(rho_db)).map_err(err)?;
    let pil = build_pilot_frame(&p, pilot_kind(pilot)?, alloc.e_c).map_err(err)?;
    let a = Constellation::qam4().scaled(data_symbol_energy(alloc.e_s, n).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vec::with_capacity(trials);
    for _ in 0..trials.max(1) {
        let xd = data_frame(&random_labels(&mut rng, m, n, &a), &a, m, n).map_err(err)?;
        v.push(frame_papr(&composite(&pil, &xd).map_err(err)?, &p, &pb).map_err(err)?);
    }
    Ok(empirical_ccdf(&v, gamma_db))
}

/// Normalised ambiguity magnitude of the pilot train in dB, row-major
/// `[tau][nu]`. Axes come from [`ambiguity_axes`].
#[wasm_bindgen]
pub fn ambiguity_surface(
    m: usize,
    n: usize,
    tau_over: usize,
    nu_over: usize,
) -> Result<Vec<f64>, JsError> {
    js(ambiguity_surface_impl(m, n, tau_over, nu_over))
}

fn ambiguity_surface_impl(m: usize, n: usize, tau_over: usize, nu_over: usize) -> Res<Vec<f64>> {
    let p = grid(m, n)?;
    let pb = PulseBank::from_params(&p);
    let span = 8 * p.q();
    let tx = pilot_train(&p, &pb, true, span).map_err(err)?;
    let rf = pilot_train(&p, &pb, false, span).map_err(err)?;
    let (taus, nus) = ambiguity_axes_inner(&p, tau_over, nu_over);
    let s = ambiguity_numeric(&tx, &rf, &taus, &nus).map_err(err)?;
    let peak = s.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(s.iter()
        .flatten()
        .map(|z| (20.0 * (z.norm() / peak).log10()).max(-80.0))
        .collect())
}

fn ambiguity_axes_inner(p: &SystemParams, tau_over: usize, nu_over: usize) -> (Vec<f64>, Vec<f64>) {
    default_grid(p, 0.5 * p.t(), 0.5 / p.t(), tau_over.max(1), nu_over.max(1))
}

/// Delay axis in delay bins followed by the Doppler axis in Doppler bins,
/// with the two lengths first: `[n_tau, n_nu, taus.., nus..]`.
#[wasm_bindgen]
pub fn ambiguity_axes(
    m: usize,
    n: usize,
    tau_over: usize,
    nu_over: usize,
) -> Result<Vec<f64>, JsError> {
    js(ambiguity_axes_impl(m, n, tau_over, nu_over))
}

fn ambiguity_axes_impl(m: usize, n: usize, tau_over: usize, nu_over: usize) -> Res<Vec<f64>> {
    let p = grid(m, n)?;
    let (taus, nus) = ambiguity_axes_inner(&p, tau_over, nu_over);
    let mut out = vec![taus.len() as f64, nus.len() as f64];
    out.extend(taus.iter().map(|t| t / p.delay_resolution()));
    out.extend(nus.iter().map(|v| v / p.doppler_resolution()));
    Ok(out)
}

/// Closed-form PSD (dB, total) at frequencies given in units of `M/T`.
#[wasm_bindgen]
pub fn psd_curve(
    pilot: &str,
    rho_db: f64,
    m: usize,
    n: usize,
    f_norm: &[f64],
) -> Result<Vec<f64>, JsError> {
    js(psd_curve_impl(pilot, rho_db, m, n, f_norm))
}

fn psd_curve_impl(pilot: &str, rho_db: f64, m: usize, n: usize, f_norm: &[f64]) -> Res<Vec<f64>> {
    let p = grid(m, n)?;
    let alloc = unit_data_power(db_to_lin(rho_db)).map_err(err)?;
    let pil = build_pilot_frame(&p, pilot_kind(pilot)?, alloc.e_c).map_err(err)?;
    let model = PsdModel::new(&p, &pil, alloc.e_s).map_err(err)?;
    let unit = m as f64 / p.t();
    Ok(f_norm
        .iter()
        .map(|&f| 10.0 * model.eval(f * unit).total.max(1e-30).log10())
        .collect())
}
