//! `qgraph`: command-line front end for quantum-graph spectra, two-particle
//! solvers, finite-difference oracles and condensation sweeps.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::input::InputError;

#[derive(Debug, Parser)]
#[command(name = "qgraph", version, about = "Spectra and condensation analysis on quantum graphs")]
pub struct Cli {
    /// Output directory (default: $QGRAPH_OUT_DIR, else the working directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One-particle eigenvalues 0 ≤ k ≤ kmax from the secular determinant.
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        kmax: f64,
        /// Scan step in k (default: a quarter of the mean root spacing π/𝓛).
        #[arg(long)]
        grid: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Negative eigenvalues -κ² with κ ≤ kappa-max.
    Negative {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        kappa_max: f64,
    },
    /// Two-particle Bethe-ansatz solvers.
    Bethe {
        #[command(subcommand)]
        model: BetheCommand,
    },
    /// Finite-difference oracle on two-particle configuration domains.
    Oracle {
        #[command(subcommand)]
        domain: OracleCommand,
    },
    /// Grand-canonical condensation sweeps.
    Bec {
        #[command(subcommand)]
        model: BecCommand,
    },
    /// Weyl-law fit of the one-particle counting function.
    Weyl {
        #[arg(long)]
        graph: PathBuf,
        /// Number of lowest positive eigenvalues to fit.
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum BetheCommand {
    /// Two bosons on [0, l] with Dirichlet ends and contact strength α.
    Gaudin(LineArgs),
    /// Two bosons on a ring of circumference l.
    Ring(LineArgs),
    /// Two particles on a graph file with `pair_interactions`.
    Graph {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        lmax: f64,
        /// Uniform strength overriding the file's table.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct LineArgs {
    #[arg(long)]
    pub length: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub lmax: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SectorArg {
    Full,
    Bosonic,
    Fermionic,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// [0, L]² with Dirichlet walls and a contact line.
    Square {
        #[arg(long = "L")]
        l: f64,
        /// Contact strength in the quadratic form (`inf` for hard core).
        #[arg(long, default_value = "0")]
        alpha: String,
        /// Robin strength on the axes x = 0, y = 0 (Dirichlet when omitted).
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_enum, default_value = "bosonic")]
        sector: SectorArg,
        /// Grid divisions of L, each twice the previous.
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        h_levels: Vec<usize>,
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Pencil {|x - y| ≤ d} truncated at L, Robin σ on the axes.
    Pencil {
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long = "L", default_value_t = 12.0)]
        l: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, value_enum, default_value = "fermionic")]
        sector: SectorArg,
        /// Grid divisions of d, each twice the previous.
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        h_levels: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        count: usize,
        /// Pair size in meters; adds eV columns.
        #[arg(long)]
        physical: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BecCommand {
    /// Free bosons on stretched copies of a graph.
    Sweep {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
        eta: Vec<f64>,
    },
    /// Bound pairs on the finite pencil.
    Pairs {
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        rho: f64,
        /// Sizes L (default 6d, 12d, 24d, 48d).
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.125)]
        h: f64,
        /// Pair size in meters; adds eV columns.
        #[arg(long)]
        physical: Option<f64>,
    },
    /// Bulk pairs coupled to surface defects in mean field.
    Surface {
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long)]
        delta: f64,
        /// Uniform defect weight e.
        #[arg(long, default_value_t = 1.0)]
        e: f64,
        #[arg(long)]
        alpha_s: f64,
        #[arg(long)]
        lambda_rep: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.125)]
        h: f64,
        /// Pair size in meters; adds eV columns.
        #[arg(long)]
        physical: Option<f64>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Core(#[from] qgraph_core::Error),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            _ => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let dir = output::out_dir(cli.out.as_deref());
    match commands::run(&cli.command).and_then(|r| Ok(r.write(&dir)?)) {
        Ok((csv, js)) => {
            println!("{}", csv.display());
            println!("{}", js.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
