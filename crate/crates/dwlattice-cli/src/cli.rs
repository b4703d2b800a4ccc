//! Argument parsing and the run driver.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dwlattice::protocols::{FinalPulse, ScanRange};

use crate::commands::{self, CommandResult};
use crate::config::{self, Config, ConfigError};
use crate::output::{timestamp, ErrorRecord, OutputDir, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dwlattice", version, about = "Spin-dependent double-well optical lattice simulator")]
pub struct Cli {
    /// Configuration file (TOML). Without it, the first dwlattice.toml on
    /// DWLATTICE_CONFIG_PATH, or in the current directory, is used.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Built-in preset applied before the configuration file.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory [default: dwlattice-out/<command>].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Random seed; required by rabi, ramsey and echo.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    pub print_defaults: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spin-dependent potentials along one lattice cell.
    Potential(PotentialArgs),
    /// Sublattice-resolved rf spectroscopy.
    Spectrum(SpectrumArgs),
    /// Spin-dependent transport versus final λ-lattice position.
    TransportScan(TransportArgs),
    /// Rabi flopping read out through transport.
    Rabi(RabiArgs),
    /// Ramsey contrast versus free-evolution time.
    Ramsey(EnsembleArgs),
    /// Spin-echo contrast versus free-evolution time.
    Echo(EnsembleArgs),
    /// Spin-path interferometer and time-of-flight profile.
    Interferometer(InterferometerArgs),
    /// Solve for the polarization giving a target sublattice splitting.
    Calibrate(CalibrateArgs),
    /// Quick internal consistency checks.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Potential(_) => "potential",
            Command::Spectrum(_) => "spectrum",
            Command::TransportScan(_) => "transport-scan",
            Command::Rabi(_) => "rabi",
            Command::Ramsey(_) => "ramsey",
            Command::Echo(_) => "echo",
            Command::Interferometer(_) => "interferometer",
            Command::Calibrate(_) => "calibrate",
            Command::Selftest => "selftest",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Command::Rabi(_) | Command::Ramsey(_) | Command::Echo(_))
    }
}

#[derive(Debug, Args)]
pub struct PotentialArgs {
    /// λ-lattice position, λ.
    #[arg(long, allow_negative_numbers = true)]
    pub dx: Option<f64>,
    /// λ/2-lattice depth, E_R.
    #[arg(long)]
    pub v_half: Option<f64>,
    /// λ-lattice depth, E_R.
    #[arg(long)]
    pub v_lambda: Option<f64>,
    /// Polarization phase, rad.
    #[arg(long, allow_negative_numbers = true)]
    pub pol_phase: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Target sublattice splitting, Hz.
    #[arg(long, allow_negative_numbers = true)]
    pub splitting: Option<f64>,
    /// Use [controls] as given instead of calibrating.
    #[arg(long)]
    pub no_calibrate: bool,
}

#[derive(Debug, Args)]
pub struct TransportArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Switch the vector light shift off.
    #[arg(long)]
    pub no_vector_shift: bool,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub atoms: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RabiArgs {
    /// Rabi frequency, Hz.
    #[arg(long)]
    pub rabi: Option<f64>,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FinalPulseArg {
    LeftSelective,
    Global,
    Omitted,
}

impl From<FinalPulseArg> for FinalPulse {
    fn from(p: FinalPulseArg) -> Self {
        match p {
            FinalPulseArg::LeftSelective => FinalPulse::LeftSelective,
            FinalPulseArg::Global => FinalPulse::Global,
            FinalPulseArg::Omitted => FinalPulse::Omitted,
        }
    }
}

#[derive(Debug, Args)]
pub struct InterferometerArgs {
    #[arg(long, value_enum)]
    pub final_pulse: Option<FinalPulseArg>,
    /// Final λ-lattice position after transport, λ.
    #[arg(long, allow_negative_numbers = true)]
    pub dx_final: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Target ν_R − ν_L, Hz.
    #[arg(long, allow_negative_numbers = true)]
    pub splitting: Option<f64>,
    /// λ/2-lattice depth, E_R.
    #[arg(long)]
    pub v_half: Option<f64>,
}

/// A failure together with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self { code: EXIT_FAILURE, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Invalid(_) => EXIT_FAILURE,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

fn load_config(cli: &Cli, search_path: Option<&std::ffi::OsStr>) -> Result<Config, Failure> {
    let mut layers = vec![];
    if let Some(name) = &cli.preset {
        layers.push((format!("preset {name}"), config::preset(name)?.to_string()));
    }
    let file = match &cli.config {
        Some(p) => Some(p.clone()),
        None => config::find_config(search_path),
    };
    if let Some(path) = file {
        layers.push((path.display().to_string(), config::read_file(&path)?));
    }
    Ok(config::from_layers(&layers)?)
}

/// Applies subcommand flags on top of the configuration.
fn apply_overrides(cfg: &mut Config, cli: &Cli, command: &Command) -> Result<(), Failure> {
    if let Some(seed) = cli.seed {
        cfg.noise.seed = seed;
    }
    let ensemble = |shots: &mut usize, atoms: &mut usize, e: &EnsembleArgs| {
        if let Some(s) = e.shots {
            *shots = s;
        }
        if let Some(a) = e.atoms {
            *atoms = a;
        }
    };
    match command {
        Command::Potential(a) => {
            let k = &mut cfg.controls;
            k.dx = a.dx.unwrap_or(k.dx);
            k.v_half = a.v_half.unwrap_or(k.v_half);
            k.v_lambda = a.v_lambda.unwrap_or(k.v_lambda);
            k.pol_phase = a.pol_phase.unwrap_or(k.pol_phase);
        }
        Command::Spectrum(a) => {
            if let Some(s) = a.splitting {
                cfg.experiment.calibrate.splitting = s;
            }
            if a.no_calibrate {
                cfg.experiment.spectrum.calibrate = false;
            }
        }
        Command::TransportScan(a) => {
            let d = cfg.experiment.transport_scan.dx;
            cfg.experiment.transport_scan.dx = ScanRange {
                start: a.start.unwrap_or(d.start),
                stop: a.stop.unwrap_or(d.stop),
                points: a.points.unwrap_or(d.points),
            };
            if a.no_vector_shift {
                cfg.experiment.transport_scan.vector_shift = false;
            }
        }
        Command::Rabi(a) => {
            let r = &mut cfg.experiment.rabi;
            r.rabi = a.rabi.unwrap_or(r.rabi);
            ensemble(&mut r.n_shots, &mut r.n_atoms, &a.ensemble);
        }
        Command::Ramsey(e) => ensemble(&mut cfg.experiment.ramsey.n_shots, &mut cfg.experiment.ramsey.n_atoms, e),
        Command::Echo(e) => ensemble(&mut cfg.experiment.echo.n_shots, &mut cfg.experiment.echo.n_atoms, e),
        Command::Interferometer(a) => {
            let i = &mut cfg.experiment.interferometer;
            if let Some(p) = a.final_pulse {
                i.final_pulse = p.into();
            }
            i.dx_final = a.dx_final.unwrap_or(i.dx_final);
        }
        Command::Calibrate(a) => {
            let c = &mut cfg.experiment.calibrate;
            c.splitting = a.splitting.unwrap_or(c.splitting);
            c.v_half = a.v_half.unwrap_or(c.v_half);
        }
        Command::Selftest => {}
    }
    cfg.validate()?;
    Ok(())
}

fn dispatch(command: &Command, cfg: &Config) -> CommandResult {
    match command {
        Command::Potential(_) => commands::potential(cfg),
        Command::Spectrum(_) => commands::spectrum(cfg),
        Command::TransportScan(_) => commands::transport_scan(cfg),
        Command::Rabi(_) => commands::rabi(cfg),
        Command::Ramsey(_) => commands::ramsey(cfg),
        Command::Echo(_) => commands::echo(cfg),
        Command::Interferometer(_) => commands::interferometer(cfg),
        Command::Calibrate(_) => commands::calibrate_cmd(cfg),
        Command::Selftest => commands::selftest(cfg),
    }
}

/// Runs one command, writing outputs into `out`. Returns the loaded
/// configuration, if it got that far, and the failure, if any.
fn execute(cli: &Cli, command: &Command, out: &mut OutputDir, search_path: Option<&std::ffi::OsStr>) -> (Option<Config>, Option<Failure>) {
    if command.is_stochastic() && cli.seed.is_none() {
        return (None, Some(Failure::usage(format!("`{}` is stochastic and requires --seed", command.name()))));
    }
    let mut cfg = match load_config(cli, search_path) {
        Ok(c) => c,
        Err(f) => return (None, Some(f)),
    };
    if let Err(f) = apply_overrides(&mut cfg, cli, command) {
        return (Some(cfg), Some(f));
    }
    let outcome = match dispatch(command, &cfg) {
        Ok(o) => o,
        Err(e) => return (Some(cfg), Some(Failure::runtime(e.to_string()))),
    };
    for s in &outcome.series {
        if let Err(e) = out.write_series(s) {
            return (Some(cfg), Some(Failure::runtime(e.to_string())));
        }
    }
    if let Err(e) = out.write_json("summary.json", &outcome.summary) {
        return (Some(cfg), Some(Failure::runtime(e.to_string())));
    }
    let failure = (!outcome.passed).then(|| Failure::runtime(format!("`{}` did not meet its own checks", command.name())));
    (Some(cfg), failure)
}

fn default_out(command: &Command) -> PathBuf {
    Path::new("dwlattice-out").join(command.name())
}

/// Entry point shared by the binary and the tests. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let search_path = std::env::var_os(config::CONFIG_PATH_ENV);

    if cli.print_defaults {
        return match load_config(&cli, search_path.as_deref()) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                EXIT_OK
            }
            Err(f) => {
                eprintln!("error: {}", f.message);
                f.code
            }
        };
    }
    let Some(command) = &cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return EXIT_USAGE;
    };

    let started = timestamp();
    let root = cli.out.clone().unwrap_or_else(|| default_out(command));
    let mut out = match OutputDir::create(&root) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let (cfg, failure) = execute(&cli, command, &mut out, search_path.as_deref());
    let manifest = RunManifest {
        tool: "dwlattice".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        arguments: args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        seed: cfg.as_ref().map(|c| c.noise.seed).filter(|_| cli.seed.is_some()),
        started,
        finished: timestamp(),
        config: cfg.as_ref().and_then(|c| serde_json::to_value(c).ok()),
        outputs: out.records().to_vec(),
        error: failure.as_ref().map(|f| ErrorRecord { message: f.message.clone(), exit_code: f.code }),
    };
    if let Err(e) = out.write_manifest(&manifest) {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    match failure {
        None => EXIT_OK,
        Some(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
