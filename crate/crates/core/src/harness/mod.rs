//! Experiment runner: config in, self-describing CSVs and a manifest out.

pub mod config;
mod experiments;
pub mod metrics;
pub mod output;

pub use config::{AmbiguityConfig, ExperimentConfig, ExperimentKind, Scale};
pub use experiments::OOBE_WINDOW;
pub use output::{read_csv, CsvRow, CurvePoint, Manifest, Table, CSV_HEADER, CSV_SCHEMA};

use crate::error::{Error, Result};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Result of one run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub params_hash: String,
    pub tables: Vec<Table>,
    /// CSV files followed by `manifest.json`.
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// First 16 hex characters of the SHA-256 over the system parameters and
/// the channel profile.
pub fn params_hash(cfg: &ExperimentConfig) -> String {
    let mut h = Sha256::new();
    h.update(cfg.params.to_json().as_bytes());
    h.update(
        serde_json::to_string(&cfg.channel)
            .expect("profile serializes")
            .as_bytes(),
    );
    hex::encode(h.finalize())[..16].to_string()
}

fn notes(cfg: &ExperimentConfig) -> serde_json::Value {
    json!({
        "association": metrics::ASSOCIATION_RULE,
        "nrmse_delay_span_bins": cfg.l_span(),
        "nrmse_doppler_span_bins": 2.0 * cfg.k_max(),
        "nmse_reference": "unit-energy impulse at delay bin l_max, Doppler 0",
        "crb_pilot": "pilot-only frame at the same pilot power",
        "crb_frame": "pilot plus the transmitted data frame",
        "power": "Es and Ec are per time-domain sample; sigma2 = Es 10^(-Es/N0/10); rho sweeps split Es + Ec = 1",
        "trials_zero": "rows with trials = 0 are closed-form or deterministic",
        "oobe_window_m_over_t": [experiments::OOBE_WINDOW.0, experiments::OOBE_WINDOW.1],
    })
}

/// Run without writing files.
pub fn run_tables(cfg: &ExperimentConfig) -> Result<(String, Vec<Table>)> {
    cfg.validate()?;
    let hash = params_hash(cfg);
    let tables = experiments::run(cfg, hash.clone())?;
    Ok((hash, tables))
}

/// Run `cfg` on `threads` workers (all cores when `None`) and write the
/// results into `out_dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<RunSummary> {
    let (params_hash, tables) = with_threads(threads, || run_tables(cfg))?;
    let manifest = Manifest {
        csv_schema: CSV_SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        kind: cfg.kind.name().to_string(),
        params_hash: params_hash.clone(),
        config: serde_json::to_value(cfg)?,
        notes: notes(cfg),
        files: Vec::new(),
    };
    let files = output::write_run(out_dir, &tables, manifest)?;
    Ok(RunSummary {
        params_hash,
        tables,
        files,
    })
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::Config("thread count must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    if threads == Some(0) {
        return Err(Error::Config("thread count must be >= 1".into()));
    }
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind, trials: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(kind, Scale::Desk);
        c.params = crate::params::SystemParams::desk()
            .with_grid(32, 8)
            .unwrap()
            .with_q(4)
            .unwrap();
        c.trials = trials;
        c
    }

    #[test]
    fn stderr_shrinks_with_trials() {
        let mut c = small(ExperimentKind::PaprCcdf, 400);
        c.rho_db = vec![-5.0];
        c.pilots = vec![crate::chirp::PilotKind::DdSrnFmcw];
        let se = |c: &ExperimentConfig| {
            let (_, t) = run_tables(c).unwrap();
            let mean = t.iter().find(|t| t.name == "papr_mean").unwrap();
            mean.rows
                .iter()
                .find(|r| r.series.ends_with("/simulated"))
                .unwrap()
                .stderr
        };
        let a = se(&c);
        c.trials = 1600;
        let b = se(&c);
        // quadrupling the trials halves the standard error, up to sampling noise
        assert!((a / b - 2.0).abs() < 0.3, "{a} {b}");
    }

    #[test]
    fn runs_are_reproducible_and_described() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(ExperimentKind::NrmseVsEsn0, 3);
        c.esn0_db = vec![10.0, 20.0];
        c.channel.paths = 2;
        let a = run_experiment(&c, &dir.path().join("a"), Some(1)).unwrap();
        let b = run_experiment(&c, &dir.path().join("b"), Some(2)).unwrap();
        for (x, y) in a.files.iter().zip(&b.files) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
        let rows = read_csv(&a.files[0]).unwrap();
        assert!(!rows.is_empty());
        assert!(rows
            .iter()
            .all(|r| r.params_hash == a.params_hash && r.trials == 3));
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(a.files.last().unwrap()).unwrap())
                .unwrap();
        assert_eq!(m["kind"], "nrmse-vs-esn0");
        assert_eq!(m["files"].as_array().unwrap().len(), a.files.len() - 1);
    }

    #[test]
    fn zero_threads_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(ExperimentKind::ChirpCompression, 1);
        assert!(matches!(
            run_experiment(&c, dir.path(), Some(0)),
            Err(Error::Config(_))
        ));
    }
}
