//! Command-line front end: scenario files, sweeps and reports.
//!
//! Exit codes: 0 ok, 1 M/G/1 validation outside its z-score limit,
//! 2 usage or configuration error, 3 delay bound infeasible or queue
//! unstable, 4 system infeasible (sum of user sizes >= 1), 5 numeric failure
//! (including a power iteration that did not converge).

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::game::SolverOptions;
use commands::Mg1Overrides;
use config::{ScenarioConfig, Spacing, SweepSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DELAY_INFEASIBLE: u8 = 3;
pub const EXIT_SYSTEM_INFEASIBLE: u8 = 4;
pub const EXIT_NUMERIC: u8 = 5;

pub fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Configuration(_) | Error::Domain(_) => EXIT_USAGE,
        Error::DelayInfeasible { .. } | Error::Unstable { .. } | Error::InfeasibleTarget { .. } => {
            EXIT_DELAY_INFEASIBLE
        }
        Error::SystemInfeasible { .. } => EXIT_SYSTEM_INFEASIBLE,
        Error::Numeric(_) | Error::Bracketing { .. } | Error::Convergence { .. } => EXIT_NUMERIC,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qamgame",
    version,
    about = "Energy-efficient M-QAM operating points under delay constraints"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario file (JSON, "version": 1). Defaults to one user at 0.1 B.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output file, or '-' for stdout.
    #[arg(long, global = true, default_value = "-")]
    pub out: String,

    /// Packet length L in bits.
    #[arg(long, global = true)]
    pub packet_bits: Option<u32>,

    /// Largest constellation size (even).
    #[arg(long, global = true)]
    pub b_max: Option<u32>,

    /// Enable trellis coding with the scenario's gain table.
    #[arg(long, global = true)]
    pub coded: bool,

    /// Grid size for sweeps.
    #[arg(long, global = true)]
    pub points: Option<usize>,

    /// RNG seed for simulation.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy-optimal SIR and peak utility per constellation.
    Table1,
    /// Normalized utility against SIR for every constellation.
    SirSweep(RangeArgs),
    /// Single-user optimum against normalized delay D*B.
    DelaySweep(RangeArgs),
    /// Multi-user equilibrium report (JSON).
    Nash,
    /// Compare the analytic mean delay with a queue simulation.
    ValidateMg1(Mg1Args),
}

#[derive(Debug, Args)]
pub struct RangeArgs {
    /// First grid value (dB for SIR sweeps, D*B for delay sweeps).
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<f64>,
    /// Last grid value.
    #[arg(long, allow_hyphen_values = true)]
    pub stop: Option<f64>,
    /// Use linear spacing for the delay sweep.
    #[arg(long)]
    pub linear: bool,
}

#[derive(Debug, Args)]
pub struct Mg1Args {
    #[arg(long, default_value_t = 1_000_000)]
    pub n_packets: u64,
    /// Override the constellation size.
    #[arg(long)]
    pub bits_per_symbol: Option<u32>,
    /// Override the symbol rate (Hz).
    #[arg(long)]
    pub symbol_rate: Option<f64>,
    /// Override the SIR (dB).
    #[arg(long, allow_hyphen_values = true)]
    pub sir_db: Option<f64>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(l) = cli.packet_bits {
        config.packet_bits = l;
    }
    if let Some(b) = cli.b_max {
        config.b_max = b;
    }
    if cli.coded {
        config.coding.enabled = true;
    }
    config.validate()?;
    Ok(config)
}

fn grid(base: SweepSpec, range: &RangeArgs, points: Option<usize>) -> Result<SweepSpec> {
    let spacing = if range.linear { Spacing::Linear } else { base.spacing };
    SweepSpec::new(
        base.variable,
        range.start.unwrap_or(base.start),
        range.stop.unwrap_or(base.stop),
        points.unwrap_or(base.points),
        spacing,
    )
}

fn emit(out: &str, text: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Configuration(format!("cannot write {out}: {e}"));
    if out == "-" {
        std::io::stdout().lock().write_all(text.as_bytes()).map_err(io)
    } else {
        std::fs::write(out, text).map_err(io)
    }
}

fn execute(cli: &Cli) -> Result<u8> {
    let config = load_config(cli)?;
    let sizes = commands::even_sizes(config.b_max);
    match &cli.command {
        Command::Table1 => {
            let coding = config.coding_for(config.coding.enabled)?;
            let rows = commands::table1(config.packet_bits, &sizes, &coding)?;
            emit(&cli.out, &commands::table1_csv(&rows))?;
        }
        Command::SirSweep(range) => {
            let grid = grid(SweepSpec::default_sir(), range, cli.points)?;
            let coding = config.coding_for(config.coding.enabled)?;
            let points = commands::sir_sweep(config.packet_bits, &sizes, &coding, &grid)?;
            emit(&cli.out, &commands::sir_sweep_csv(&points))?;
        }
        Command::DelaySweep(range) => {
            let grid = grid(SweepSpec::default_delay(), range, cli.points)?;
            let points = commands::delay_sweep(&config, &grid)?;
            let infeasible = points.iter().filter(|p| p.optimum.is_none()).count();
            if infeasible > 0 {
                eprintln!("{infeasible} of {} grid points are delay-infeasible", points.len());
            }
            emit(&cli.out, &commands::delay_sweep_csv(&points))?;
        }
        Command::Nash => {
            let report = commands::nash(&config, config.coding.enabled, SolverOptions::default())?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Numeric(e.to_string()))?;
            emit(&cli.out, &(text + "\n"))?;
            if !report.converged {
                eprintln!(
                    "power iteration stopped after {} sweeps without converging",
                    report.iterations
                );
                return Ok(EXIT_NUMERIC);
            }
        }
        Command::ValidateMg1(args) => {
            let overrides = Mg1Overrides {
                bits_per_symbol: args.bits_per_symbol,
                symbol_rate: args.symbol_rate,
                sir_db: args.sir_db,
            };
            let report = commands::validate_mg1(&config, config.coding.enabled, overrides, args.n_packets, cli.seed)?;
            emit(&cli.out, &report.render())?;
            if !report.passes() {
                eprintln!("simulation disagrees with the analytic delay: z = {}", report.z);
                return Ok(EXIT_VALIDATION);
            }
        }
    }
    Ok(EXIT_OK)
}
