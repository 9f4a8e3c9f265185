// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linbis_cli::{cmd_bisim, cmd_ctx_search, cmd_eval, cmd_lmc, cmd_typecheck, Report, RunConfig};
use linbis_core::syntax::CalculusMode;

/// Type checker, evaluator and bisimilarity checker for linear lambda
/// calculi with probabilistic and quantum effects.
#[derive(Parser)]
#[command(name = "linbis", version)]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Opts {
    /// det, prob or quantum. Overrides a `-- mode: ...` line in the file.
    #[arg(long, global = true)]
    mode: Option<CalculusMode>,
    /// Closed values per type in the generated test basis.
    #[arg(long, global = true, default_value_t = linbis_core::bisim::DEFAULT_BASIS_SIZE)]
    basis_size: usize,
    /// JSON test basis; missing types are generated unless --strict-basis.
    #[arg(long, global = true)]
    basis_file: Option<PathBuf>,
    #[arg(long, global = true)]
    strict_basis: bool,
    /// Rounds of the distinguishing game.
    #[arg(long, global = true, default_value_t = 6)]
    depth: usize,
    /// Largest context size tried by ctx-search.
    #[arg(long, global = true, default_value_t = 8)]
    ctx_bound: usize,
    /// Probability tolerance for the quantum calculus.
    #[arg(long, global = true, default_value_t = linbis_core::quantum::TOLERANCE)]
    tol: f64,
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON file of extra gates.
    #[arg(long, global = true)]
    gates: Option<PathBuf>,
    /// Print the reduction trace before the result.
    #[arg(long, global = true)]
    trace: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the type of a closed program.
    Typecheck { file: PathBuf },
    /// Print the output distribution of a closed program.
    Eval { file: PathBuf },
    /// Play the distinguishing game on two programs, or check a candidate
    /// relation with --relation.
    Bisim {
        files: Vec<PathBuf>,
        #[arg(long)]
        relation: Option<PathBuf>,
        /// Check a simulation instead of a bisimulation.
        #[arg(long)]
        simulation: bool,
    },
    /// Search for a context separating two programs.
    CtxSearch { left: PathBuf, right: PathBuf },
    /// Quotient of an explicit chain, or a check of --relation on it.
    Lmc {
        file: PathBuf,
        #[arg(long)]
        relation: Option<PathBuf>,
        #[arg(long)]
        simulation: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let o = cli.opts;
    if let Some(n) = o.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut cfg = RunConfig {
        mode: o.mode,
        basis_size: o.basis_size,
        basis_file: o.basis_file,
        strict_basis: o.strict_basis,
        depth: o.depth,
        ctx_bound: o.ctx_bound,
        tol: o.tol,
        json: o.json,
        gates: o.gates,
        trace: o.trace,
        ..RunConfig::default()
    };
    let report: Report = match cli.cmd {
        Cmd::Typecheck { file } => cmd_typecheck(&file, &cfg),
        Cmd::Eval { file } => cmd_eval(&file, &cfg),
        Cmd::Bisim { files, relation, simulation } => {
            cfg.relation = relation;
            cfg.simulation = simulation;
            cmd_bisim(&files, &cfg)
        }
        Cmd::CtxSearch { left, right } => cmd_ctx_search(&left, &right, &cfg),
        Cmd::Lmc { file, relation, simulation } => {
            cfg.relation = relation;
            cfg.simulation = simulation;
            cmd_lmc(&file, &cfg)
        }
    };
    print!("{}", report.stdout);
    eprint!("{}", report.stderr);
    ExitCode::from(report.code as u8)
}
