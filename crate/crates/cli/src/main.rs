//! `dualmix`: command-line driver for the dual mixed Poisson solver.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, CommonArgs, Settings};

#[derive(Parser, Debug)]
#[command(name = "dualmix", version, about = "Dual mixed RT0/P1 Poisson solver and inf-sup experiments")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Generate meshes and write them as JSON
    Mesh(#[command(flatten)] CommonArgs),
    /// Solve the dual mixed problem and write nodal values and fluxes
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// smooth, eigen, one, dirac, dirac-center, dirac-off-center or random
        #[arg(long)]
        load: Option<String>,
    },
    /// Tabulate the smallest inf-sup eigenvalues per level
    Infsup(#[command(flatten)] CommonArgs),
    /// Split the discrete solution into stable and unstable parts
    Split {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        load: Option<String>,
        /// Eigenvalue threshold in (0, 1)
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Dump the spectral coefficients of a load
    Alpha {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        load: Option<String>,
    },
    /// P1-P0 inf-sup constant and its worst function
    P1p0(#[command(flatten)] CommonArgs),
    /// Reconstruct an equilibrated flux from a discrete Poisson solution
    Equilibrate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        load: Option<String>,
    },
    /// Error norms and rates against a known exact solution
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        /// smooth-square or lshape-singular
        #[arg(long)]
        case: Option<String>,
    },
    /// Compare mixed and Galerkin potentials for a load
    Demo {
        #[command(flatten)]
        common: CommonArgs,
        /// dirac, dirac-center, dirac-off-center or smooth
        #[arg(long)]
        load: Option<String>,
    },
}

fn settings(sub: Sub) -> anyhow::Result<Settings> {
    match sub {
        Sub::Mesh(c) => Settings::resolve(Command::Mesh, &c, None, None, None),
        Sub::Solve { common, load } => Settings::resolve(Command::Solve, &common, load, None, None),
        Sub::Infsup(c) => Settings::resolve(Command::Infsup, &c, None, None, None),
        Sub::Split { common, load, threshold } => Settings::resolve(Command::Split, &common, load, threshold, None),
        Sub::Alpha { common, load } => Settings::resolve(Command::Alpha, &common, load, None, None),
        Sub::P1p0(c) => Settings::resolve(Command::P1p0, &c, None, None, None),
        Sub::Equilibrate { common, load } => Settings::resolve(Command::Equilibrate, &common, load, None, None),
        Sub::Convergence { common, case } => Settings::resolve(Command::Convergence, &common, None, None, case),
        Sub::Demo { common, load } => Settings::resolve(Command::Demo, &common, load, None, None),
    }
}

/// Help and version go to stdout as usual. Usage errors are cut to their
/// first line so that every failure is reported on a single line.
fn parse_failure(e: clap::Error) -> ExitCode {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = e.print();
            ExitCode::SUCCESS
        }
        ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            ExitCode::from(2)
        }
        _ => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error: {first} (run 'dualmix help' for usage)");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => return parse_failure(e),
    };
    match settings(cli.command).and_then(|s| commands::run(&s).map(|()| s)) {
        Ok(s) => {
            eprintln!("{}: wrote results to {}", s.command, s.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
