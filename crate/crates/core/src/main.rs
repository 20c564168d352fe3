use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use liquid_mini::driver::{self, Options};

/// Liquid-type checker for a small Haskell-like language.
#[derive(Parser, Debug)]
#[command(name = "liquid-mini", version)]
struct Cli {
    /// SMT solver executable (default: $LIQUID_MINI_SOLVER, then z3, cvc4, cvc5 on PATH)
    #[arg(long, value_name = "PATH")]
    solver: Option<PathBuf>,
    /// Extra qualifiers, one per line
    #[arg(long, value_name = "FILE")]
    qualifiers: Option<PathBuf>,
    /// Print the subtyping constraints
    #[arg(long)]
    dump_constraints: bool,
    /// Print the inferred refinement for every kvar
    #[arg(long)]
    dump_solution: bool,
    /// Write every solver query to a numbered file under DIR
    #[arg(long, value_name = "DIR")]
    dump_smt: Option<PathBuf>,
    /// Print the inferred type scheme of every top-level binding
    #[arg(long)]
    dump_shapes: bool,
    /// Print measure declarations and constructor axioms
    #[arg(long)]
    dump_measures: bool,
    /// Start a fresh solver process for every query
    #[arg(long)]
    no_incremental: bool,
    /// Per-query solver timeout in seconds
    #[arg(long, value_name = "SECS", default_value_t = 10.0)]
    timeout: f64,
    /// Number of files checked concurrently
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
    #[arg(required = true)]
    files: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.timeout > 0.0 && cli.timeout.is_finite()) {
        eprintln!("error: --timeout must be positive");
        return ExitCode::from(2);
    }
    let opts = Options {
        solver: cli.solver,
        qualifiers: cli.qualifiers,
        dump_constraints: cli.dump_constraints,
        dump_solution: cli.dump_solution,
        dump_smt: cli.dump_smt,
        dump_shapes: cli.dump_shapes,
        dump_measures: cli.dump_measures,
        incremental: !cli.no_incremental,
        timeout: Duration::from_secs_f64(cli.timeout),
        jobs: cli.jobs.max(1),
    };
    let (out, code) = driver::run(&cli.files, &opts);
    print!("{out}");
    ExitCode::from(code as u8)
}
