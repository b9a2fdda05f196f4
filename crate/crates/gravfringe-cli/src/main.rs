//! `gravfringe`: wave-packet densities, action corrections and fringe
//! visibility for two trapped masses coupled by gravity.

mod commands;
mod config;
mod error;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::report::Report;

#[derive(Parser)]
#[command(
    name = "gravfringe",
    version,
    about = "Relativistic wave packets and gravitationally induced fringe loss"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Configuration file: `key = value` lines or a JSON object.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Compare adaptive integrals against the brute-force oracle.
    #[arg(long, global = true)]
    verify: bool,

    /// Normalize density profiles to unit integral.
    #[arg(long, global = true)]
    normalize: bool,

    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,

    /// Output formats (overrides `formats`).
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Vec<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Density profiles of the wave packets at crossing times.
    Density,
    /// Fringe visibility at every crossing.
    Visibility,
    /// Packet-centre drift under corrected and uncorrected sampling.
    FreqCheck,
    /// First-order action corrections of the four branches.
    Action,
    /// Relativistic against Newtonian phases and visibilities.
    CompareNrqm,
    /// Regenerate a figure with its fixed parameters.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Visibility => "visibility",
            Command::FreqCheck => "freq-check",
            Command::Action => "action",
            Command::CompareNrqm => "compare-nrqm",
            Command::Reproduce { figure: Figure::Fig2 } => "reproduce fig2",
            Command::Reproduce { figure: Figure::Fig3 } => "reproduce fig3",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if cli.verify {
        config.verify = true;
    }
    if cli.normalize {
        config.normalize = true;
    }
    if !cli.format.is_empty() {
        config.formats = cli
            .format
            .iter()
            .map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
                FormatArg::Svg => Format::Svg,
            })
            .collect();
    }
    // Figures fix their physical parameters; numerics and output stay configurable.
    match &cli.command {
        Some(Command::Reproduce { figure: Figure::Fig2 }) => {
            config.omega = commands::FIG2_OMEGA;
            config.alpha = commands::FIG2_ALPHA;
        }
        Some(Command::Reproduce { figure: Figure::Fig3 }) => {
            config.omega = commands::FIG3_OMEGA;
            config.alpha = commands::FIG3_ALPHA;
            config.kappa = commands::FIG3_KAPPA;
            config.crossing_count = commands::FIG3_CROSSINGS;
        }
        _ => {}
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load(cli)?;
    if cli.print_config {
        print!("{}", config.render());
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Config("a subcommand is required; see --help".into()));
    };
    config.validate()?;
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {} worker threads: {e}", config.threads)))?;
    }
    let mut report = Report::new(command.name(), &config)?;
    match command {
        Command::Density => commands::density(&config, &mut report)?,
        Command::Visibility => commands::visibility(&config, &mut report)?,
        Command::FreqCheck => commands::freq_check(&config, &mut report)?,
        Command::Action => commands::action(&config, &mut report)?,
        Command::CompareNrqm => commands::compare_nrqm(&config, &mut report)?,
        Command::Reproduce { figure: Figure::Fig2 } => commands::reproduce_fig2(&config, &mut report)?,
        Command::Reproduce { figure: Figure::Fig3 } => commands::reproduce_fig3(&config, &mut report)?,
    }
    for file in report.finish()? {
        println!("{}", config.out_dir.join(file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gravfringe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
