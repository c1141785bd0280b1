//! System parameters, delay-Doppler frames and power allocation.
//!
//! Frames are stored delay-major: entry `(m, n)` lives at `n * M + m`, so the
//! backing vector is the column-stacked vectorisation of the `M x N` grid.

use crate::error::{invalid, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Schema version written into every serialized parameter set.
pub const PARAMS_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawParams {
    #[serde(default = "schema_default")]
    schema: u32,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T")]
    t: f64,
    f_c: f64,
    beta: f64,
    #[serde(rename = "Q")]
    q: usize,
    #[serde(rename = "O")]
    o: usize,
    l_max: usize,
}

fn schema_default() -> u32 {
    PARAMS_SCHEMA
}

/// Immutable system configuration of one ODDM frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SystemParams {
    m: usize,
    n: usize,
    t: f64,
    f_c: f64,
    beta: f64,
    q: usize,
    o: usize,
    l_max: usize,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = crate::error::Error;
    fn try_from(r: RawParams) -> Result<Self> {
        if r.schema != PARAMS_SCHEMA {
            return invalid(format!("unsupported params schema {}", r.schema));
        }
        SystemParams::new(r.m, r.n, r.t, r.f_c, r.beta, r.q, r.o, r.l_max)
    }
}

impl From<SystemParams> for RawParams {
    fn from(p: SystemParams) -> Self {
        RawParams {
            schema: PARAMS_SCHEMA,
            m: p.m,
            n: p.n,
            t: p.t,
            f_c: p.f_c,
            beta: p.beta,
            q: p.q,
            o: p.o,
            l_max: p.l_max,
        }
    }
}

impl SystemParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: usize,
        n: usize,
        t: f64,
        f_c: f64,
        beta: f64,
        q: usize,
        o: usize,
        l_max: usize,
    ) -> Result<Self> {
        if m < 2 || m % 2 != 0 {
            return invalid(format!("M must be even and >= 2, got {m}"));
        }
        if n < 2 || n % 2 != 0 {
            return invalid(format!("N must be even and >= 2, got {n}"));
        }
        if !(t.is_finite() && t > 0.0) {
            return invalid("T must be positive");
        }
        if !f_c.is_finite() {
            return invalid("f_c must be finite");
        }
        if !(0.0..=1.0).contains(&beta) {
            return invalid(format!("beta must lie in [0, 1], got {beta}"));
        }
        if q == 0 {
            return invalid("Q must be >= 1");
        }
        if o == 0 {
            return invalid("O must be >= 1");
        }
        if l_max >= m {
            return invalid(format!("l_max ({l_max}) must be < M ({m})"));
        }
        Ok(SystemParams {
            m,
            n,
            t,
            f_c,
            beta,
            q,
            o,
            l_max,
        })
    }

    /// Full-size configuration (M=256, N=64, T=66.67 us, fc=5 GHz).
    pub fn paper() -> Self {
        let t = 66.67e-6;
        let m = 256;
        let l_max = ChannelProfile::paper().l_max_bins(m, t).ceil() as usize;
        SystemParams::new(m, 64, t, 5e9, 0.15, 20, 8, l_max).expect("valid preset")
    }

    /// Reduced configuration used for fast tests (M=64, N=16).
    pub fn desk() -> Self {
        let t = 66.67e-6;
        let m = 64;
        let l_max = ChannelProfile::paper().l_max_bins(m, t).ceil() as usize;
        SystemParams::new(m, 16, t, 5e9, 0.15, 20, 8, l_max).expect("valid preset")
    }

    /// Copy with a different RC truncation half-width.
    pub fn with_q(&self, q: usize) -> Result<Self> {
        Self::new(
            self.m, self.n, self.t, self.f_c, self.beta, q, self.o, self.l_max,
        )
    }

    /// Copy with a different grid size; `l_max` is rescaled to the new `M`.
    pub fn with_grid(&self, m: usize, n: usize) -> Result<Self> {
        let l_max = ((self.l_max as f64) * m as f64 / self.m as f64).ceil() as usize;
        Self::new(
            m,
            n,
            self.t,
            self.f_c,
            self.beta,
            self.q,
            self.o,
            l_max.min(m - 1),
        )
    }

    pub fn with_oversampling(&self, o: usize) -> Result<Self> {
        Self::new(
            self.m, self.n, self.t, self.f_c, self.beta, self.q, o, self.l_max,
        )
    }

    pub fn with_l_max(&self, l_max: usize) -> Result<Self> {
        Self::new(
            self.m, self.n, self.t, self.f_c, self.beta, self.q, self.o, l_max,
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn f_c(&self) -> f64 {
        self.f_c
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn o(&self) -> usize {
        self.o
    }
    pub fn l_max(&self) -> usize {
        self.l_max
    }
    /// Number of samples per frame, `M N`.
    pub fn frame_len(&self) -> usize {
        self.m * self.n
    }
    /// Delay resolution `T / M` in seconds.
    pub fn delay_resolution(&self) -> f64 {
        self.t / self.m as f64
    }
    /// Doppler resolution `1 / (N T)` in hertz.
    pub fn doppler_resolution(&self) -> f64 {
        1.0 / (self.n as f64 * self.t)
    }
    /// Nominal bandwidth `M / T`.
    pub fn bandwidth(&self) -> f64 {
        self.m as f64 / self.t
    }

    /// Canonical JSON used for hashing and manifests.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// First 16 hex characters of the SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

/// Physical channel extent: maximum delay and Doppler plus path count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub tau_max: f64,
    pub nu_max: f64,
    pub paths: usize,
}

impl ChannelProfile {
    /// 5 km monostatic range and 150 m/s radial speed at 5 GHz, four paths.
    pub fn paper() -> Self {
        ChannelProfile {
            tau_max: 33.36e-6,
            nu_max: 5003.46,
            paths: 4,
        }
    }
    /// Maximum delay in bins of `T / M`.
    pub fn l_max_bins(&self, m: usize, t: f64) -> f64 {
        self.tau_max * m as f64 / t
    }
    /// Maximum Doppler in bins of `1 / (N T)`.
    pub fn k_max_bins(&self, n: usize, t: f64) -> f64 {
        self.nu_max * n as f64 * t
    }
}

/// What a frame holds; carried for bookkeeping only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameRole {
    Pilot,
    Data,
    Composite,
    Received,
    Compressed,
}

/// An `M x N` complex delay-Doppler grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdFrame {
    m: usize,
    n: usize,
    pub role: FrameRole,
    data: Vec<Complex64>,
}

impl DdFrame {
    pub fn zeros(m: usize, n: usize, role: FrameRole) -> Self {
        DdFrame {
            m,
            n,
            role,
            data: vec![Complex64::new(0.0, 0.0); m * n],
        }
    }

    /// Build from a column-stacked vector (`index = n * M + m`).
    pub fn from_vec(m: usize, n: usize, role: FrameRole, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != m * n {
            return Err(crate::error::Error::Shape(format!(
                "expected {} entries, got {}",
                m * n,
                data.len()
            )));
        }
        Ok(DdFrame { m, n, role, data })
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[n * self.m + m]
    }
    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: Complex64) {
        self.data[n * self.m + m] = v;
    }
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }
    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
    /// Column `n` (one Doppler bin across all delays).
    pub fn column(&self, n: usize) -> &[Complex64] {
        &self.data[n * self.m..(n + 1) * self.m]
    }
    pub fn column_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.data[n * self.m..(n + 1) * self.m]
    }

    fn check_same(&self, other: &DdFrame) -> Result<()> {
        if self.m != other.m || self.n != other.n {
            return Err(crate::error::Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.m, self.n, other.m, other.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &DdFrame, role: FrameRole) -> Result<DdFrame> {
        self.check_same(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(DdFrame {
            m: self.m,
            n: self.n,
            role,
            data,
        })
    }

    pub fn sub(&self, other: &DdFrame, role: FrameRole) -> Result<DdFrame> {
        self.check_same(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DdFrame {
            m: self.m,
            n: self.n,
            role,
            data,
        })
    }

    pub fn scaled(&self, s: f64) -> DdFrame {
        DdFrame {
            m: self.m,
            n: self.n,
            role: self.role,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }
}

/// Pilot and data power split for a given pilot-to-data ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// Pilot power per time-domain sample.
    pub e_c: f64,
    /// Data power per time-domain sample.
    pub e_s: f64,
    /// Pilot-to-data power ratio (linear).
    pub rho: f64,
}

/// Split `total = E_c + E_s` such that `E_c / E_s = rho`.
pub fn split_power(rho: f64, total: f64) -> Result<PowerAllocation> {
    if !(rho.is_finite() && rho >= 0.0) {
        return invalid(format!("rho must be finite and >= 0, got {rho}"));
    }
    if !(total.is_finite() && total > 0.0) {
        return invalid("total power must be positive");
    }
    let e_s = total / (1.0 + rho);
    Ok(PowerAllocation {
        e_c: rho * e_s,
        e_s,
        rho,
    })
}

/// Allocation with unit data power and `E_c = rho`.
pub fn unit_data_power(rho: f64) -> Result<PowerAllocation> {
    if !(rho.is_finite() && rho >= 0.0) {
        return invalid(format!("rho must be finite and >= 0, got {rho}"));
    }
    Ok(PowerAllocation {
        e_c: rho,
        e_s: 1.0,
        rho,
    })
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn presets() {
        let p = SystemParams::paper();
        assert_eq!((p.m(), p.n(), p.q(), p.o()), (256, 64, 20, 8));
        assert_eq!(p.l_max(), 129);
        assert!((p.delay_resolution() - 66.67e-6 / 256.0).abs() < 1e-18);
        let d = SystemParams::desk();
        assert_eq!(d.l_max(), 33);
    }

    #[test]
    fn rejects_bad() {
        assert!(SystemParams::new(63, 16, 1e-4, 0.0, 0.15, 20, 8, 10).is_err());
        assert!(SystemParams::new(64, 16, 1e-4, 0.0, 1.5, 20, 8, 10).is_err());
        assert!(SystemParams::new(64, 16, 1e-4, 0.0, 0.15, 20, 8, 64).is_err());
        assert!(split_power(-1.0, 1.0).is_err());
    }

    #[test]
    fn json_fields_and_hash() {
        let p = SystemParams::desk();
        let v: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        for k in ["schema", "M", "N", "T", "f_c", "beta", "Q", "O", "l_max"] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
        let back = SystemParams::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.hash(), p.hash());
        assert_eq!(p.hash().len(), 16);
        assert_ne!(p.hash(), SystemParams::paper().hash());
    }

    #[test]
    fn split_example() {
        let a = split_power(db_to_lin(-8.0), 1.0).unwrap();
        assert!((a.e_c / a.e_s - db_to_lin(-8.0)).abs() < 1e-15);
        assert!((a.e_c + a.e_s - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn split_power_invariant(rho in 0.0f64..100.0, total in 1e-3f64..1e3) {
            let a = split_power(rho, total).unwrap();
            prop_assert!(((a.e_c + a.e_s) - total).abs() <= 4.0 * f64::EPSILON * total);
            prop_assert!((a.e_c / a.e_s - rho).abs() <= 4.0 * f64::EPSILON * rho.max(1e-300));
        }

        #[test]
        fn frame_json_roundtrip_bit_exact(vals in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 8)) {
            let data: Vec<Complex64> = vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let f = DdFrame::from_vec(4, 2, FrameRole::Data, data).unwrap();
            let s = serde_json::to_string(&f).unwrap();
            let g: DdFrame = serde_json::from_str(&s).unwrap();
            for (x, y) in f.as_slice().iter().zip(g.as_slice()) {
                prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }
}
