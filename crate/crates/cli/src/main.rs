use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qmcli::commands::{self, Output, SweepArgs};
use qmcli::CliResult;

#[derive(Parser)]
#[command(name = "qmcli", version, about = "Finite-dimensional quantum measurement laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measured POVM, components, verdicts and correlations of a scenario.
    Simulate {
        /// JSON file or builtin:NAME[?key=value&...]
        #[arg(long)]
        scenario: String,
        /// Overrides the scenario tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Seed for the extra test states of the first-kind and repeatability checks.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Seeded property suites for the correlation theorems.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Instances per theorem.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Harness self-test: flips a sign in a conclusion.
        #[arg(long, hide = true)]
        inject_bug: bool,
    },
    /// Correlation sweep over the coupling constant; writes CSV.
    Sweep {
        #[arg(long, default_value = "quadrature")]
        model: String,
        /// Signal truncation.
        #[arg(long = "n", short = 'n', default_value_t = 64)]
        n: usize,
        /// Comma-separated coupling constants.
        #[arg(long, allow_hyphen_values = true)]
        lambdas: String,
        /// vacuum | squeezed:R | coherent:A
        #[arg(long, default_value = "vacuum")]
        probe: String,
        /// coherent:A | fock:K
        #[arg(long, default_value = "coherent:1")]
        signal: String,
        #[arg(long, default_value_t = 2)]
        bins: usize,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recomputes a scenario through the dense brute-force path.
    Oracle {
        #[arg(long)]
        scenario: String,
        /// Largest accepted discrepancy.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn run(cli: Cli) -> CliResult<Output> {
    match cli.command {
        Command::Simulate { scenario, tol, seed } => commands::simulate(&scenario, tol, seed),
        Command::Verify { seed, count, inject_bug } => commands::verify(seed, count, inject_bug),
        Command::Sweep { model, n, lambdas, probe, signal, bins, out } => commands::sweep(&SweepArgs {
            model: &model,
            n,
            lambdas: &lambdas,
            probe: &probe,
            signal: &signal,
            bins,
            out: out.as_deref(),
        }),
        Command::Oracle { scenario, tol } => commands::oracle(&scenario, tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth a panic
            let _ = stdout.write_all(out.text.as_bytes());
            let _ = stdout.flush();
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
