use clap::{Args, Parser, Subcommand, ValueEnum};
use ddfmcw::harness::{run_experiment, ExperimentConfig, ExperimentKind, Scale};
use ddfmcw::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Monte Carlo experiments for chirp-pilot delay-Doppler ISAC frames.
#[derive(Parser)]
#[command(name = "ddfmcw", version)]
struct Cli {
    #[command(subcommand)]
    kind: Kind,
}

#[derive(Subcommand)]
enum Kind {
    /// PAPR tail of the composite frame against the closed form
    PaprCcdf(Opts),
    /// Analytic and simulated power spectral densities
    Psd(Opts),
    /// Ambiguity surface of the pilot train
    Ambiguity(Opts),
    /// Delay-Doppler response after chirp compression
    ChirpCompression(Opts),
    /// Detection BER over Es/N0
    BerVsEsn0(Opts),
    /// Channel-estimate NMSE over Es/N0
    NmseVsEsn0(Opts),
    /// Delay and Doppler NRMSE over Es/N0
    NrmseVsEsn0(Opts),
    /// Detection BER over the pilot-to-data ratio at fixed total power
    BerVsRho(Opts),
    /// Delay and Doppler NRMSE over the pilot-to-data ratio
    NrmseVsRho(Opts),
    /// Cramer-Rao bounds of the pilot alone
    Crb(Opts),
}

impl Kind {
    fn split(self) -> (ExperimentKind, Opts) {
        use ExperimentKind as E;
        match self {
            Kind::PaprCcdf(o) => (E::PaprCcdf, o),
            Kind::Psd(o) => (E::Psd, o),
            Kind::Ambiguity(o) => (E::Ambiguity, o),
            Kind::ChirpCompression(o) => (E::ChirpCompression, o),
            Kind::BerVsEsn0(o) => (E::BerVsEsn0, o),
            Kind::NmseVsEsn0(o) => (E::NmseVsEsn0, o),
            Kind::NrmseVsEsn0(o) => (E::NrmseVsEsn0, o),
            Kind::BerVsRho(o) => (E::BerVsRho, o),
            Kind::NrmseVsRho(o) => (E::NrmseVsRho, o),
            Kind::Crb(o) => (E::Crb, o),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Args)]
struct Opts {
    /// JSON file overlaid on the defaults of the chosen kind
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: results/<kind>]
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed, overriding the config file
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long, env = "DDFMCW_THREADS")]
    threads: Option<usize>,
    /// Default sizes: quick desk runs or full-size runs
    #[arg(long, value_enum)]
    scale: Option<ScaleArg>,
    /// Print the effective config as JSON and exit
    #[arg(long)]
    print_config: bool,
}

fn load(kind: ExperimentKind, o: &Opts) -> Result<ExperimentConfig, Error> {
    let scale = o.scale.map(|s| match s {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    });
    let mut cfg = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text, Some(kind), scale)?
        }
        None => ExperimentConfig::new(kind, scale.unwrap_or(Scale::Desk)),
    };
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let (kind, opts) = Cli::parse().kind.split();
    let cfg = match load(kind, &opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if opts.print_config {
        println!("{}", cfg.to_json());
        return ExitCode::SUCCESS;
    }
    let out = opts
        .out
        .unwrap_or_else(|| PathBuf::from("results").join(kind.name()));
    match run_experiment(&cfg, &out, opts.threads) {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(Error::Config(e)) => {
            eprintln!("error: configuration error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
