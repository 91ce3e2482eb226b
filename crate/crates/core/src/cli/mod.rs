//! Command-line front end.

pub mod commands;
pub mod format;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{cmd_bench, cmd_generate, cmd_solve, Family, Report, SolveFlags, EXIT_PARSE};

#[derive(Debug, Parser)]
#[command(name = "rooted-steiner", version, about = "Exact Steiner trees without rooted K4-minors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance file and print the optimum and a witness tree.
    Solve {
        path: PathBuf,
        /// Validate the witness and compare with the exhaustive solver when it fits.
        #[arg(long)]
        verify: bool,
        /// Refuse instances with a rooted K4-minor before solving.
        #[arg(long)]
        check_minor: bool,
        #[arg(long)]
        json: bool,
        /// Weights are multiplied by 10^POW.
        #[arg(long, value_name = "POW", default_value_t = 0)]
        scale: u32,
    },
    /// Print a generated instance file.
    Generate {
        #[command(subcommand)]
        family: FamilyArg,
    },
    /// Time the solver on unit grids and print CSV.
    Bench {
        /// Approximate vertex counts.
        #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = [16, 36, 64, 100])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum FamilyArg {
    /// Grid with terminals spread along the outer face.
    GridOneFace {
        rows: usize,
        cols: usize,
        terminals: usize,
        #[arg(long, default_value_t = 1)]
        lo: i64,
        #[arg(long, default_value_t = 1)]
        hi: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The complete graph on five vertices with three terminals.
    Figure1Right,
    /// Small random connected instance without a rooted K4-minor.
    RandomMinorFree {
        n: usize,
        terminals: usize,
        #[arg(long, default_value_t = 0)]
        virtual_edges: usize,
        #[arg(long, default_value_t = 8)]
        max_weight: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::GridOneFace { rows, cols, terminals, lo, hi, seed } => {
                Family::GridOneFace { rows, cols, terminals, lo, hi, seed }
            }
            FamilyArg::Figure1Right => Family::Figure1Right,
            FamilyArg::RandomMinorFree { n, terminals, virtual_edges, max_weight, seed } => {
                Family::RandomMinorFree { n, terminals, virtual_edges, max_weight, seed }
            }
        }
    }
}

/// Parses arguments and runs one command.
pub fn run<I, T>(args: I) -> Report
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Report { code, stdout: text, stderr: String::new() }
            } else {
                Report { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match cli.command {
        Command::Solve { path, verify, check_minor, json, scale } => match std::fs::read_to_string(&path) {
            Ok(text) => cmd_solve(&text, SolveFlags { verify, check_minor, json, scale }),
            Err(e) => Report {
                code: EXIT_PARSE,
                stdout: String::new(),
                stderr: format!("error: {}: {e}\n", path.display()),
            },
        },
        Command::Generate { family } => cmd_generate(family.into()),
        Command::Bench { sizes, reps } => cmd_bench(&sizes, reps),
    }
}
