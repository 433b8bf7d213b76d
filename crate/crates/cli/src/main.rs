use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gns_lattice_cli::{run, CliError, Command, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "gns-lattice", version, about = "Sector-structured lattice experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML config, or JSON when the extension is `.json`. Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Kinetic coupling.
    #[arg(long, global = true)]
    g: Option<f64>,

    /// Fixed η for the generator (skips the plateau search).
    #[arg(long, global = true)]
    eta: Option<f64>,

    /// Window length per axis.
    #[arg(long, global = true)]
    window: Option<usize>,

    #[arg(long, global = true)]
    nmax: Option<usize>,

    #[arg(long = "t-max", global = true)]
    t_max: Option<f64>,

    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Partial overlap of two product backgrounds over growing boxes.
    SectorOverlap,
    /// Sector verdict, sign table and Liouvillian residual under time reversal.
    TimeReversalDemo,
    /// Windowed Schrödinger evolution of a local excitation.
    Evolve,
    /// Projected generator, η plateau and weak-coupling comparison.
    MasterEq,
    /// Seeded equivalence checks against dense oracles.
    OracleCheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        g: cli.g,
        eta: cli.eta,
        window: cli.window,
        n_max: cli.nmax,
        t_max: cli.t_max,
        dt: cli.dt,
    });
    let command = match cli.command {
        Cmd::SectorOverlap => Command::SectorOverlap,
        Cmd::TimeReversalDemo => Command::TimeReversalDemo,
        Cmd::Evolve => Command::Evolve,
        Cmd::MasterEq => Command::MasterEq,
        Cmd::OracleCheck => Command::OracleCheck,
    };
    run(command, &cfg, &cli.out)
}
