//! Superimposed frame assembly: pilot on the zero-Doppler column, data on the rest.

use crate::chirp::Pilot;
use crate::detection::Constellation;
use crate::error::{invalid, Result};
use crate::params::{DdFrame, FrameRole};
use rand::Rng;

/// Flat indices (`n * M + m`) of the data-bearing positions, columns `1..N`.
pub fn data_positions(m: usize, n: usize) -> Vec<usize> {
    (m..m * n).collect()
}

/// Per-symbol energy giving time-domain data power `e_s` when only `N - 1`
/// of the `N` Doppler columns carry data.
pub fn data_symbol_energy(e_s: f64, n: usize) -> f64 {
    e_s * n as f64 / (n as f64 - 1.0)
}

/// Draw uniform constellation labels for every data position.
pub fn random_labels<R: Rng>(rng: &mut R, m: usize, n: usize, a: &Constellation) -> Vec<usize> {
    let mut labels = vec![0usize; m * n];
    for i in data_positions(m, n) {
        labels[i] = rng.gen_range(0..a.points.len());
    }
    labels
}

/// Data frame with `a` already scaled to the desired symbol energy.
/// Labels outside the data positions are ignored.
pub fn data_frame(labels: &[usize], a: &Constellation, m: usize, n: usize) -> Result<DdFrame> {
    if labels.len() != m * n {
        return invalid(format!("expected {} labels, got {}", m * n, labels.len()));
    }
    let mut x = DdFrame::zeros(m, n, FrameRole::Data);
    let s = x.as_mut_slice();
    for i in data_positions(m, n) {
        let Some(pt) = a.points.get(labels[i]) else {
            return invalid(format!("label {} outside constellation", labels[i]));
        };
        s[i] = *pt;
    }
    Ok(x)
}

/// Pilot plus data.
pub fn composite(pilot: &Pilot, data: &DdFrame) -> Result<DdFrame> {
    pilot.frame.add(data, FrameRole::Composite)
}
