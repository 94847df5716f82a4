//! `rmm`: rank-maximal matchings from the command line.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a
//! verification step finds a mismatch.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "rmm", version, about = "Rank-maximal matchings under vertex arrivals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print a rank-maximal matching.
    Solve {
        instance: PathBuf,
        /// Write one file per phase with its reduced graph, matching and labels.
        #[arg(long, value_name = "DIR")]
        dump_phases: Option<PathBuf>,
    },
    /// Process arrival events in order, updating the matching incrementally.
    Stream {
        instance: PathBuf,
        events: PathBuf,
        /// Only report whether the old matching stays rank-maximal.
        #[arg(long)]
        check_only: bool,
        /// Print each update path as a vertex sequence.
        #[arg(long)]
        emit_paths: bool,
        /// Re-solve from scratch after each event and compare.
        #[arg(long)]
        verify: bool,
        /// Write the phase files of every updated instance, one directory per event.
        #[arg(long, value_name = "DIR")]
        dump_phases: Option<PathBuf>,
    },
    /// Find a popular matching for strict preference lists.
    Popular { preferences: PathBuf },
    /// Maintain a popular matching under applicant and post arrivals.
    PopularStream { preferences: PathBuf, events: PathBuf },
    /// Exhaustive reference computations for small inputs.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Compare incremental updates with recomputation on a generated stream.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Best signature over all matchings.
    Signature { instance: PathBuf },
    /// All single paths from the first arriving vertex that restore a best signature.
    Paths { instance: PathBuf, events: PathBuf },
    /// A matching that no other matching beats, if one exists.
    Popular { preferences: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Update,
    Recompute,
    Both,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Applicants in the base instance.
    #[arg(long)]
    n: u32,
    #[arg(long)]
    posts: u32,
    /// Maximum rank.
    #[arg(long)]
    r: u32,
    /// Probability that an applicant-post pair is an edge.
    #[arg(long)]
    density: f64,
    #[arg(long)]
    events: usize,
    /// One scenario per seed; several seeds may be given, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    seed: Vec<u64>,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    /// Report path. With several seeds, `.seed<k>` is inserted before the extension.
    #[arg(long)]
    out: PathBuf,
    /// Scenarios run at once.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Share of events that are post arrivals.
    #[arg(long, default_value_t = 0.2)]
    post_share: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(commands::Outcome::Ok) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Mismatch) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
