//! `dfpp`: command-line access to the discrete fractional Poisson process.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use table::Format;

/// Environment variable overriding the default relative tolerance.
pub const TOL_ENV: &str = "DFPP_REL_TOL";

#[derive(Debug, Parser)]
#[command(
    name = "dfpp",
    version,
    about = "Discrete-time fractional Poisson process toolkit",
    after_help = "Environment:\n  DFPP_REL_TOL  default for --tol (relative series tolerance)\n\nExit codes: 0 success, 1 I/O failure, 2 invalid arguments, 3 numerical failure (JSON diagnostic on stderr)."
)]
struct Cli {
    /// Output format
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,

    /// Write output to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Relative tolerance for series truncation
    #[arg(long, env = TOL_ENV, default_value_t = 1e-12, global = true)]
    tol: f64,

    /// Term budget for each series evaluation
    #[arg(long, default_value_t = 10_000, global = true)]
    max_terms: usize,

    /// Widest extended-precision arithmetic (1, 2, 3, 4 or 8 limbs); 1 keeps plain double
    #[arg(long, default_value_t = 8, global = true)]
    max_limbs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ProcessArgs {
    /// Fractional order, 0 < q <= 1
    #[arg(long)]
    q: f64,
    /// Rate parameter, 0 < lam < 1
    #[arg(long)]
    lam: f64,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[command(flatten)]
    process: ProcessArgs,
    /// Last time step simulated
    #[arg(long)]
    horizon: usize,
    /// Number of independent paths
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "renewal")]
    model: commands::ModelArg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generalized binomial coefficient h_alpha(x)
    Hfun {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        /// One or more arguments, comma separated
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// Discrete Mittag-Leffler function F_{q,lam}(t); lam may be negative
    Ml {
        #[arg(long)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        lam: f64,
        /// One or more times, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<usize>,
    },
    /// Waiting-time PMF and CDF for u = 1..=u_max
    WtPmf {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long)]
        u_max: usize,
    },
    /// Waiting-time PGF: closed form, derivative and, with --u-max, the partial series
    WtPgf {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        z: Vec<f64>,
        #[arg(long)]
        u_max: Option<usize>,
    },
    /// Truncated mean E[min(T, t_max)] and its lower bound
    WtMean {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        t_max: Vec<usize>,
    },
    /// P(N(t) = n) from the exact series
    CountPmf {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long)]
        t: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// P(N(t) = n) for n = 0..=n_max
    CountTable {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Generating function of P(N(t) = n) in t against its closed form
    CountGfCheck {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        z: f64,
        #[arg(long)]
        t_max: usize,
    },
    /// Sibuya PMF and survival for k = 1..=k_max
    Sibuya {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        k_max: usize,
    },
    /// Renewal vs subordinated waiting-time PMFs
    CompareModels {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long)]
        u_max: usize,
        /// Also write both PGFs on the z-grid -1.0, -0.9, ..., 1.0 to this file
        #[arg(long)]
        pgf_out: Option<PathBuf>,
    },
    /// Simulated paths: event count and event times per path
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Monte Carlo estimates against exact probabilities
    McCompare {
        #[command(flatten)]
        sim: SimArgs,
        /// Compare counts N(t), or the first waiting time on 1..=horizon
        #[arg(long, value_enum, default_value = "count")]
        quantity: commands::Quantity,
        /// Time at which N(t) is compared (default: the horizon)
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code())
        }
    }
}
