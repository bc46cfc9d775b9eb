//! `bjlab` — survival-probability experiments on the finite Bixon-Jortner
//! model from the command line.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 conservation
//! violation during integration, 4 decay-fit failure in single-run mode.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Need, PartialConfig};

/// Default output directory when neither `--out` nor `BJLAB_OUT` is set.
const OUT_ENV: &str = "BJLAB_OUT";

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(String),
    /// Exit code 3.
    Conservation(String),
    /// Exit code 4.
    Fit(String),
    /// Exit code 1.
    Io(String),
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }
    fn conservation(message: impl Into<String>) -> Self {
        CliError::Conservation(message.into())
    }
    fn fit(message: impl Into<String>) -> Self {
        CliError::Fit(message.into())
    }
    fn io(message: impl Into<String>) -> Self {
        CliError::Io(message.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Conservation(_) => 3,
            CliError::Fit(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Conservation(m) => write!(f, "{m}"),
            CliError::Fit(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "bjlab",
    version,
    about = "Bixon-Jortner survival-probability simulations: coupled-amplitude \
             integration, exact spectral cross-checks, decay fits, and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one configuration; writes trajectory.csv and summary.json
    Simulate(CommonOpts),
    /// One run per total state count n (m = n/2 - 1); writes sweep_n.json
    SweepN {
        /// Comma-separated even state counts, e.g. 26,16,8,6,4,2
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<i64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// One run per coupling strength at fixed ladder size; writes sweep_v.json
    SweepV {
        /// Comma-separated couplings, e.g. 0.10,0.075,0.02
        #[arg(long, value_delimiter = ',', required = true)]
        vbar_list: Vec<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Fitted decay constant vs the golden rule over a coupling list;
    /// writes table1.csv (defaults: epsilon 0.10, m 12, the five standard
    /// couplings)
    Table1 {
        /// Comma-separated couplings (default 0.075,0.05,0.02,0.01,0.002)
        #[arg(long, value_delimiter = ',')]
        vbar_list: Option<Vec<f64>>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Eigenvalues and bright-state weights; writes spectrum.csv
    Spectrum(CommonOpts),
}

#[derive(Args, Debug, Default)]
struct CommonOpts {
    /// Config file: flat key = value lines (TOML syntax)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: $BJLAB_OUT, then the working directory)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Ladder half-width; k runs over -m..=m
    #[arg(long)]
    m: Option<i64>,
    /// Bright-dark transition matrix element (inverse time)
    #[arg(long)]
    vbar: Option<f64>,
    /// Dark-level spacing (inverse time)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Bright-state frequency (default 0)
    #[arg(long)]
    omega_s: Option<f64>,
    /// Integration end time
    #[arg(long)]
    t_final: Option<f64>,
    /// Step-size bound (default 0.001; larger values need --allow-coarse)
    #[arg(long)]
    dt_max: Option<f64>,
    /// Permit dt_max above 0.001
    #[arg(long)]
    allow_coarse: bool,
    /// Store every this-many steps (default 10)
    #[arg(long)]
    sample_stride: Option<usize>,
    /// Dark states to emit in the trajectory CSV (default 0,1,2)
    #[arg(long, value_delimiter = ',')]
    tracked_k: Option<Vec<i64>>,
    /// Explicit fit window LO,HI (default: automatic)
    #[arg(long, value_delimiter = ',', num_args = 2, value_names = ["LO", "HI"])]
    fit_window: Option<Vec<f64>>,
    /// Peak prominence threshold (default 0.01)
    #[arg(long)]
    peak_prominence: Option<f64>,
}

impl CommonOpts {
    fn to_partial(&self) -> PartialConfig {
        PartialConfig {
            m: self.m,
            vbar: self.vbar,
            epsilon: self.epsilon,
            omega_s: self.omega_s,
            t_final: self.t_final,
            dt_max: self.dt_max,
            sample_stride: self.sample_stride,
            tracked_k: self.tracked_k.clone(),
            fit_window: self.fit_window.as_ref().map(|w| (w[0], w[1])),
            peak_prominence: self.peak_prominence,
            allow_coarse: if self.allow_coarse { Some(true) } else { None },
        }
    }

    /// File values overlaid with flag values (flags win).
    fn merged(&self) -> Result<PartialConfig, CliError> {
        let from_file = match &self.config {
            Some(path) => PartialConfig::from_file(path)?,
            None => PartialConfig::default(),
        };
        Ok(from_file.overlaid_with(self.to_partial()))
    }

    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(common) => {
            let config = common.merged()?.resolve(Need::ALL)?;
            commands::simulate(&config, &common.out_dir())
        }
        Command::SweepN { n_list, common } => {
            let base = common.merged()?.resolve(Need {
                m: false,
                vbar: true,
                t_final: true,
                tracked_k: false,
            })?;
            commands::sweep_n(&base, &n_list, &common.out_dir())
        }
        Command::SweepV { vbar_list, common } => {
            let base = common.merged()?.resolve(Need {
                m: true,
                vbar: false,
                t_final: true,
                tracked_k: false,
            })?;
            commands::sweep_v(&base, &vbar_list, &common.out_dir())
        }
        Command::Table1 { vbar_list, common } => {
            let mut merged = common.merged()?;
            // the table has its own conventions when nothing is supplied
            merged.m = merged.m.or(Some(12));
            merged.epsilon = merged.epsilon.or(Some(0.10));
            let base = merged.resolve(Need {
                m: true,
                vbar: false,
                t_final: false,
                tracked_k: false,
            })?;
            let vbar_list = vbar_list.unwrap_or_else(|| vec![0.075, 0.05, 0.02, 0.01, 0.002]);
            commands::table1(&base, &vbar_list, &common.out_dir())
        }
        Command::Spectrum(common) => {
            let config = common.merged()?.resolve(Need {
                m: true,
                vbar: true,
                t_final: false,
                tracked_k: false,
            })?;
            commands::spectrum(&config, &common.out_dir())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bjlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
