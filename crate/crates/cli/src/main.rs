//! `fpu`: seeded chain simulations and the analyses run over their records.

mod commands;
mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpu_core::{Error, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "fpu", version, about = "Thermalized β-FPU chain simulator and spectral analysis")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides one config key, e.g. `--set beta=8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Thermalize, then record the trajectory and mode records.
    Simulate,
    /// Time-averaged wave-action spectrum.
    Spectrum(SpectrumArgs),
    /// ω–k spectrum, peak frequencies and the measured η.
    Dispersion(DispersionArgs),
    /// Quartic-to-quadratic energy ratios before and after renormalization.
    Ratios(EtaArgs),
    /// Amplitude and slow phase of selected modes.
    Modes(ModesArgs),
    /// High-pass filter the trajectory and track breathers.
    Breathers(BreatherArgs),
    /// Independent runs over a list of β values.
    Sweep(SweepArgs),
    /// Run the internal consistency checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct EtaArgs {
    /// Renormalization factor; defaults to the measured one in `eta.csv`,
    /// then to the mean-field estimate.
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// `bare` or `renormalized`.
    #[arg(long, default_value = "bare")]
    dispersion: String,
    #[command(flatten)]
    eta: EtaArgs,
}

#[derive(Debug, Args)]
struct DispersionArgs {
    /// Resonance width for the near-resonance count; defaults to the
    /// measured spectral width at k = N/4.
    #[arg(long)]
    delta: Option<f64>,
    /// Welch segment length in samples.
    #[arg(long, default_value_t = 1 << 14)]
    segment_len: usize,
}

#[derive(Debug, Args)]
struct ModesArgs {
    /// Mode numbers, comma separated or repeated.
    #[arg(long = "k", required = true, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, default_value = "renormalized")]
    dispersion: String,
    #[command(flatten)]
    eta: EtaArgs,
}

#[derive(Debug, Args)]
struct BreatherArgs {
    /// Cut-off frequency; defaults to `omega_cut` from the config, else 7.
    #[arg(long)]
    omega_cut: Option<f64>,
    /// Local energy must exceed this multiple of the spatial median.
    #[arg(long, default_value_t = 5.0)]
    threshold: f64,
    /// Absolute local energy floor.
    #[arg(long, default_value_t = 0.5)]
    floor: f64,
    /// Minimum lifetime in samples.
    #[arg(long, default_value_t = 3)]
    sustain: usize,
    /// Samples per filter block.
    #[arg(long, default_value_t = 1 << 16)]
    block: usize,
    /// Samples shared by consecutive blocks.
    #[arg(long)]
    overlap: Option<usize>,
    /// Skip writing the filtered field.
    #[arg(long)]
    no_qf: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64,128")]
    betas: Vec<f64>,
    #[arg(long, default_value_t = 1 << 14)]
    segment_len: usize,
    /// Worker threads; 0 picks one per core.
    #[arg(long, env = "FPU_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Random states per identity check.
    #[arg(long, default_value_t = 100)]
    states: usize,
    /// Length of the energy-conservation run.
    #[arg(long, default_value_t = 1e5)]
    drift_time: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0} of {1} checks failed")]
    ChecksFailed(usize, usize),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Config(_) | Error::Parameter(_)) => 2,
            CliError::Core(Error::Io(_) | Error::Format(_)) => 4,
            CliError::Core(_) | CliError::ChecksFailed(..) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("`--set {kv}`: expected KEY=VALUE")))?;
        config.set(k, v)?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> CliResult<()> {
    let config = load_config(&cli)?;
    match cli.command {
        Command::Simulate => commands::simulate(&config),
        Command::Spectrum(a) => commands::spectrum(&config, &a.dispersion, a.eta.eta),
        Command::Dispersion(a) => commands::dispersion(&config, a.delta, a.segment_len),
        Command::Ratios(a) => commands::ratios(&config, a.eta),
        Command::Modes(a) => commands::modes(&config, &a.k, &a.dispersion, a.eta.eta),
        Command::Breathers(a) => commands::breathers(
            &config,
            &commands::BreatherOptions {
                omega_cut: a.omega_cut,
                threshold: a.threshold,
                floor: a.floor,
                sustain: a.sustain,
                block: a.block,
                overlap: a.overlap,
                write_qf: !a.no_qf,
            },
        ),
        Command::Sweep(a) => commands::sweep(&config, &a.betas, a.segment_len, a.threads),
        Command::Verify(a) => commands::verify(&config, a.states, a.drift_time),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpu: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::from(Error::Config("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::Parameter("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::BlowUp { step: 1, t: 0.0 }).exit_code(), 3);
        assert_eq!(CliError::from(Error::Undefined("x".into())).exit_code(), 3);
        assert_eq!(CliError::ChecksFailed(1, 2).exit_code(), 3);
        assert_eq!(CliError::from(Error::Format("x".into())).exit_code(), 4);
        let io = std::io::Error::new(std::io::ErrorKind::PermissionDenied, "x");
        assert_eq!(CliError::from(io).exit_code(), 4);
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::parse_from(["fpu", "--seed", "7", "--set", "beta=8", "--out", "o", "simulate"]);
        let c = load_config(&cli).unwrap();
        assert_eq!((c.seed, c.beta, c.output_dir.to_str().unwrap()), (7, 8.0, "o"));
        let bad = Cli::parse_from(["fpu", "--set", "beta", "simulate"]);
        assert_eq!(load_config(&bad).unwrap_err().exit_code(), 2);
    }
}
