//! Shared FFT plans, created once per length and direction.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

type PlanMap = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

fn table() -> &'static RwLock<PlanMap> {
    static T: OnceLock<RwLock<PlanMap>> = OnceLock::new();
    T.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Plan for length `n`; `inverse` selects the positive-exponent transform.
pub fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    if let Some(p) = table().read().expect("fft table").get(&(n, inverse)) {
        return p.clone();
    }
    let mut w = table().write().expect("fft table");
    w.entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Unnormalised forward DFT in place.
pub fn forward(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

/// Unnormalised inverse DFT in place.
pub fn inverse(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}
