use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hgroupoid_cli::run::{default_out, execute, parse_tolerance, write_report, RunOptions};
use hgroupoid_cli::{builtin, CliError, Suite};

/// Verification suites for the tangent groupoid of a Heisenberg manifold.
#[derive(Parser)]
#[command(name = "hgroupoid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite of checks and write a JSON report.
    Run {
        /// Manifest file, or builtin:NAME.
        #[arg(long)]
        manifest: String,
        /// levi, coords, group, classify, diffeo, groupoid or all.
        #[arg(long, default_value = "all")]
        suite: Suite,
        /// Report path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the manifest's jet order.
        #[arg(long)]
        jet_order: Option<u32>,
        /// Overrides the manifest's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// NAME=VALUE; repeatable.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
    },
    /// List the built-in manifests.
    ListExamples,
    /// Print a built-in manifest.
    ShowExample { name: String },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::ListExamples => {
            for name in builtin::names() {
                println!("{name}");
            }
            Ok(true)
        }
        Command::ShowExample { name } => {
            let text = builtin::source(&name)
                .ok_or_else(|| CliError::Usage(format!("no built-in manifest {name:?}")))?;
            print!("{text}");
            Ok(true)
        }
        Command::Run {
            manifest,
            suite,
            out,
            jet_order,
            seed,
            tol,
        } => {
            let tolerances = tol
                .iter()
                .map(|t| parse_tolerance(t))
                .collect::<Result<_, _>>()?;
            let opts = RunOptions {
                manifest,
                suite,
                jet_order,
                seed,
                tolerances,
            };
            let report = execute(&opts)?;
            write_report(&report, &out.unwrap_or_else(default_out))?;
            print!("{}", report.human_summary());
            Ok(report.all_pass())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
