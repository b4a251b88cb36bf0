use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mpg_cli::{cmd_eval, cmd_run, cmd_selftest, faulty_projector, RunOverrides, EXIT_FAILURE};
use mpg_core::selftest::default_projector;

/// Independent policy-gradient experiments on tabular Markov games.
///
/// Log verbosity comes from the MPG_LOG environment variable
/// (error, warn, info, debug, trace; default warn).
#[derive(Parser)]
#[command(name = "mpg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a learner on every configured seed and write trace files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds, replacing the config list.
        #[arg(long, value_delimiter = ',')]
        seed: Option<Vec<u64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record the Nash gap every this many iterations.
        #[arg(long)]
        cadence: Option<usize>,
    },
    /// Print the Nash gaps of a policy file on a game file.
    Eval { game: PathBuf, policy: PathBuf },
    /// Run the fast invariant suites.
    Selftest {
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    Projection,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MPG_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out, cadence } => {
            cmd_run(&config, &RunOverrides { seeds: seed, out, cadence }).map(|rows| {
                for r in rows {
                    println!("seed {} final_max_gap {:e} nash_regret {:e}", r.seed, r.final_max_gap, r.nash_regret);
                }
            })
        }
        Command::Eval { game, policy } => cmd_eval(&game, &policy).map(|report| print!("{report}")),
        Command::Selftest { inject_fault } => {
            let projector = match inject_fault {
                Some(Fault::Projection) => faulty_projector,
                None => default_projector,
            };
            let (passed, report) = cmd_selftest(projector);
            print!("{report}");
            return if passed { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILURE as u8) };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
