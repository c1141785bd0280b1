//! Declarative run description with scale-dependent defaults and JSON overlays.

use crate::chirp::PilotKind;
use crate::detection::Constellation;
use crate::error::{Error, Result};
use crate::params::{ChannelProfile, SystemParams};
use crate::sensing::SensingConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PaprCcdf,
    Psd,
    Ambiguity,
    ChirpCompression,
    BerVsEsn0,
    NmseVsEsn0,
    NrmseVsEsn0,
    BerVsRho,
    NrmseVsRho,
    Crb,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::PaprCcdf,
        ExperimentKind::Psd,
        ExperimentKind::Ambiguity,
        ExperimentKind::ChirpCompression,
        ExperimentKind::BerVsEsn0,
        ExperimentKind::NmseVsEsn0,
        ExperimentKind::NrmseVsEsn0,
        ExperimentKind::BerVsRho,
        ExperimentKind::NrmseVsRho,
        ExperimentKind::Crb,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::PaprCcdf => "papr-ccdf",
            ExperimentKind::Psd => "psd",
            ExperimentKind::Ambiguity => "ambiguity",
            ExperimentKind::ChirpCompression => "chirp-compression",
            ExperimentKind::BerVsEsn0 => "ber-vs-esn0",
            ExperimentKind::NmseVsEsn0 => "nmse-vs-esn0",
            ExperimentKind::NrmseVsEsn0 => "nrmse-vs-esn0",
            ExperimentKind::BerVsRho => "ber-vs-rho",
            ExperimentKind::NrmseVsRho => "nrmse-vs-rho",
            ExperimentKind::Crb => "crb",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == s)
    }

    /// Which sweep axis the kind iterates over.
    fn axis(&self) -> Axis {
        match self {
            ExperimentKind::PaprCcdf | ExperimentKind::BerVsRho | ExperimentKind::NrmseVsRho => {
                Axis::Rho
            }
            ExperimentKind::BerVsEsn0
            | ExperimentKind::NmseVsEsn0
            | ExperimentKind::NrmseVsEsn0
            | ExperimentKind::Crb => Axis::Esn0,
            _ => Axis::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Esn0,
    Rho,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "desk" => Some(Scale::Desk),
            "paper" => Some(Scale::Paper),
            _ => None,
        }
    }
}

/// Ambiguity grid extent and sidelobe guards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbiguityConfig {
    /// Half-width of the delay axis in units of `T`.
    pub tau_span: f64,
    /// Half-width of the Doppler axis in units of `1 / T`.
    pub nu_span: f64,
    pub tau_oversample: usize,
    pub nu_oversample: usize,
    /// Axis strips excluded from the off-axis peak, in delay / Doppler bins.
    pub tau_guard_bins: f64,
    pub nu_guard_bins: f64,
}

impl Default for AmbiguityConfig {
    fn default() -> Self {
        AmbiguityConfig {
            tau_span: 0.5,
            nu_span: 0.5,
            tau_oversample: 8,
            nu_oversample: 4,
            tau_guard_bins: 2.0,
            nu_guard_bins: 2.0,
        }
    }
}

/// Everything a run needs. Unset JSON fields take the defaults of the
/// chosen kind and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub scale: Scale,
    pub seed: u64,
    pub params: SystemParams,
    pub channel: ChannelProfile,
    /// Monte Carlo trials (frames or channel draws) per sweep point.
    pub trials: usize,
    pub pilots: Vec<PilotKind>,
    /// Constellation preset name.
    pub constellation: String,
    /// Es/N0 axis in dB.
    pub esn0_db: Vec<f64>,
    /// CDPR axis in dB.
    pub rho_db: Vec<f64>,
    /// CDPR used when sweeping Es/N0 and for the PSD.
    pub cdpr_db: f64,
    /// (Es + Ec) / N0 held fixed when sweeping the CDPR.
    pub total_snr_db: f64,
    pub i_det: usize,
    pub i_jcedd: usize,
    pub sensing: SensingConfig,
    /// Include the perfect-CSI detector in BER runs.
    pub perfect_csi: bool,
    /// Include pilot-only pursuit benchmarks in estimation runs.
    pub baselines: bool,
    /// CCDF thresholds in dB.
    pub gamma0_db: Vec<f64>,
    pub ambiguity: AmbiguityConfig,
    /// Single path used by the compression run, in bins.
    pub path_l: f64,
    pub path_k: f64,
}

fn default_trials(kind: ExperimentKind, scale: Scale) -> usize {
    let desk = match kind {
        ExperimentKind::PaprCcdf => 10_000,
        ExperimentKind::Ambiguity | ExperimentKind::ChirpCompression => 1,
        _ => 200,
    };
    match scale {
        Scale::Desk => desk,
        Scale::Paper if desk == 1 => 1,
        Scale::Paper => (desk * 10).max(2000),
    }
}

impl ExperimentConfig {
    /// Defaults for `kind` at `scale`.
    pub fn new(kind: ExperimentKind, scale: Scale) -> Self {
        let params = match scale {
            Scale::Desk => SystemParams::desk().with_q(8).expect("valid Q"),
            Scale::Paper => SystemParams::paper(),
        };
        let rho_db = match kind {
            ExperimentKind::PaprCcdf => vec![-10.0, -5.0, 0.0],
            _ => vec![-25.0, -20.0, -15.0, -10.0, -5.0, 0.0],
        };
        let esn0_db = match kind {
            ExperimentKind::BerVsEsn0 => vec![8.0, 12.0, 16.0, 20.0],
            _ => vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
        };
        ExperimentConfig {
            kind,
            scale,
            seed: 1,
            params,
            channel: ChannelProfile::paper(),
            trials: default_trials(kind, scale),
            pilots: vec![PilotKind::DdSrnFmcw, PilotKind::Ddip],
            constellation: "qam4".into(),
            esn0_db,
            rho_db,
            cdpr_db: -8.0,
            total_snr_db: 16.0,
            i_det: 8,
            i_jcedd: 8,
            sensing: SensingConfig::default(),
            perfect_csi: true,
            baselines: true,
            gamma0_db: (0..=120).map(|i| i as f64 * 0.1).collect(),
            ambiguity: AmbiguityConfig::default(),
            path_l: 10.0,
            path_k: 0.0,
        }
    }

    /// Overlay a JSON object on the defaults. `kind` and `scale`, when given,
    /// must agree with any values in the JSON.
    pub fn from_json(
        text: &str,
        kind: Option<ExperimentKind>,
        scale: Option<Scale>,
    ) -> Result<Self> {
        let user: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        let Value::Object(obj) = &user else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let json_kind = match obj.get("kind") {
            None => None,
            Some(v) => Some(
                v.as_str()
                    .and_then(ExperimentKind::from_name)
                    .ok_or_else(|| Error::Config(format!("unknown experiment kind {v}")))?,
            ),
        };
        let kind = match (kind, json_kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!(
                    "config kind {} conflicts with {}",
                    b.name(),
                    a.name()
                )))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::Config("experiment kind not given".into())),
        };
        let json_scale = match obj.get("scale") {
            None => None,
            Some(v) => Some(
                v.as_str()
                    .and_then(Scale::from_name)
                    .ok_or_else(|| Error::Config(format!("unknown scale {v}")))?,
            ),
        };
        let scale = scale.or(json_scale).unwrap_or(Scale::Desk);
        let mut base = serde_json::to_value(Self::new(kind, scale))?;
        let mut user = user;
        if let Value::Object(o) = &mut user {
            o.insert("scale".into(), serde_json::to_value(scale)?);
        }
        merge(&mut base, user);
        let cfg: Self = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        match self.kind.axis() {
            Axis::Esn0 if self.esn0_db.is_empty() => return bad("esn0_db sweep is empty".into()),
            Axis::Rho if self.rho_db.is_empty() => return bad("rho_db sweep is empty".into()),
            _ => {}
        }
        let all = self
            .esn0_db
            .iter()
            .chain(&self.rho_db)
            .chain(&self.gamma0_db);
        if !all
            .chain([
                &self.cdpr_db,
                &self.total_snr_db,
                &self.path_l,
                &self.path_k,
            ])
            .all(|v| v.is_finite())
        {
            return bad("sweep values must be finite".into());
        }
        if self.kind == ExperimentKind::PaprCcdf
            && (self.gamma0_db.is_empty() || self.gamma0_db.windows(2).any(|w| w[1] <= w[0]))
        {
            return bad("gamma0_db must be non-empty and strictly increasing".into());
        }
        let needs_pilot = !matches!(
            self.kind,
            ExperimentKind::ChirpCompression | ExperimentKind::Ambiguity
        );
        if needs_pilot
            && self.pilots.is_empty()
            && !(self.kind == ExperimentKind::BerVsEsn0 && self.perfect_csi)
        {
            return bad("at least one pilot kind is required".into());
        }
        Constellation::preset(&self.constellation).map_err(|e| Error::Config(e.to_string()))?;
        self.sensing
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.i_det == 0 || self.i_jcedd == 0 {
            return bad("I_DET and I_JCEDD must be >= 1".into());
        }
        let ch = &self.channel;
        if ch.paths == 0 || !(ch.tau_max > 0.0 && ch.nu_max >= 0.0) {
            return bad("channel profile needs paths >= 1 and positive extent".into());
        }
        let (m, n, t) = (self.params.m(), self.params.n(), self.params.t());
        if ch.l_max_bins(m, t) > self.params.l_max() as f64 {
            return bad(format!(
                "channel delay extent {:.3} bins exceeds l_max {}",
                ch.l_max_bins(m, t),
                self.params.l_max()
            ));
        }
        if ch.k_max_bins(n, t) >= n as f64 / 2.0 {
            return bad("channel Doppler extent must stay below N/2 bins".into());
        }
        if self.kind == ExperimentKind::ChirpCompression
            && !(0.0..self.params.l_max() as f64).contains(&self.path_l)
        {
            return bad("path_l must lie in [0, l_max)".into());
        }
        let a = &self.ambiguity;
        if !(a.tau_span > 0.0 && a.nu_span > 0.0 && a.tau_oversample > 0 && a.nu_oversample > 0) {
            return bad("ambiguity spans and oversampling must be positive".into());
        }
        Ok(())
    }

    /// Delay extent of the channel in bins.
    pub fn l_span(&self) -> f64 {
        self.channel.l_max_bins(self.params.m(), self.params.t())
    }

    /// Maximum Doppler magnitude in bins.
    pub fn k_max(&self) -> f64 {
        self.channel.k_max_bins(self.params.n(), self.params.t())
    }
}

/// Recursive object merge; non-object values replace.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_for_every_kind() {
        for k in ExperimentKind::ALL {
            for s in [Scale::Desk, Scale::Paper] {
                let c = ExperimentConfig::new(k, s);
                c.validate().unwrap();
                if !matches!(
                    k,
                    ExperimentKind::Ambiguity | ExperimentKind::ChirpCompression
                ) {
                    assert!(c.trials >= if s == Scale::Desk { 200 } else { 2000 });
                }
                assert_eq!(ExperimentKind::from_name(k.name()), Some(k));
            }
        }
    }

    #[test]
    fn overlay_keeps_unset_fields() {
        let c = ExperimentConfig::from_json(
            r#"{"trials": 7, "params": {"M": 128, "l_max": 66}}"#,
            Some(ExperimentKind::Psd),
            None,
        )
        .unwrap();
        assert_eq!(c.trials, 7);
        assert_eq!(c.params.m(), 128);
        assert_eq!(c.params.n(), 16);
        assert_eq!(c.cdpr_db, -8.0);
        let back = ExperimentConfig::from_json(&c.to_json(), None, None).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_configs() {
        let k = Some(ExperimentKind::BerVsEsn0);
        for text in [
            "[1]",
            "{",
            r#"{"trials": 0}"#,
            r#"{"esn0_db": []}"#,
            r#"{"unknown_field": 1}"#,
            r#"{"kind": "psd"}"#,
            r#"{"constellation": "qam1024"}"#,
            r#"{"params": {"M": 7}}"#,
            r#"{"channel": {"tau_max": 1.0}}"#,
        ] {
            assert!(
                matches!(
                    ExperimentConfig::from_json(text, k, None),
                    Err(Error::Config(_))
                ),
                "{text}"
            );
        }
        assert!(ExperimentConfig::from_json("{}", None, None).is_err());
    }
}
