use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use codeaware_cli::commands::{self, GenerateMode};
use codeaware_cli::config::load_resolved;
use codeaware_cli::error::{CliError, Result};

/// Code-aware combinatorial interaction testing.
///
/// Exit codes: 0 success, 1 validation error, 2 adapter or protocol error,
/// 3 internal invariant violation.
#[derive(Debug, Parser)]
#[command(name = "codeaware", version)]
struct Cli {
    /// Pipeline config (TOML or JSON).
    #[arg(short, long, global = true, default_value = "codeaware.toml")]
    config: PathBuf,

    /// Log verbosity; repeat for more detail. RUST_LOG overrides it.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the impact experiments and write coverage, impacts and sensitivity.
    Analyze,
    /// Build the correlation matrix and the strength plan.
    Plan {
        /// Use this correlation matrix CSV instead of computing one.
        #[arg(long)]
        import: Option<PathBuf>,
    },
    /// Generate the uniform baseline and the code-aware mixed suite.
    Generate {
        /// Generate only a uniform suite of this strength.
        #[arg(long)]
        uniform: Option<usize>,
    },
    /// Check a suite file against the plan (or a uniform strength).
    Verify {
        /// Suite file (.csv or .json).
        suite: PathBuf,
        /// Check uniform coverage of this strength instead of the plan.
        #[arg(long)]
        uniform: Option<usize>,
    },
    /// Score suites against the fixture's mutants.
    Evaluate {
        /// Baseline suite [default: <output_dir>/suite-uniform-<base>way.json]
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Candidate suite [default: <output_dir>/suite-code-aware-mixed.json]
        #[arg(long)]
        candidate: Option<PathBuf>,
    },
    /// Run analyze, plan, generate, evaluate and report in order.
    Pipeline,
    /// Summarize existing artifacts into report.txt.
    Report,
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_resolved(&cli.config)?;
    match &cli.command {
        Command::Analyze => {
            let out = commands::analyze(&cfg)?;
            println!(
                "{} runs ({} failed); impacts written to {}",
                out.matrix.len(),
                out.matrix.failed_count(),
                cfg.output_dir.join(commands::IMPACTS_FILE).display()
            );
        }
        Command::Plan { import } => {
            let out = commands::plan(&cfg, import.as_deref())?;
            println!(
                "{} group(s), {} don't-care parameter(s); plan written to {}",
                out.plan.groups.len(),
                out.plan.dont_care.len(),
                cfg.output_dir.join(commands::PLAN_FILE).display()
            );
        }
        Command::Generate { uniform } => {
            let mode = uniform.map_or(GenerateMode::Pipeline, GenerateMode::Uniform);
            let out = commands::generate(&cfg, mode)?;
            for s in &out.suites {
                println!(
                    "{}: {} tests, {} tuples covered",
                    s.suite.label,
                    s.suite.len(),
                    s.verification.covered
                );
            }
        }
        Command::Verify { suite, uniform } => {
            let report = commands::verify(&cfg, suite, *uniform)?;
            println!(
                "{}",
                codeaware_core::doc::to_json(&report.to_json(&cfg.model)).trim_end()
            );
            if !report.is_complete() {
                return Err(CliError::Validation(format!(
                    "{} of {} tuples uncovered",
                    report.uncovered.len(),
                    report.total
                )));
            }
        }
        Command::Evaluate { baseline, candidate } => {
            let out = commands::evaluate(&cfg, baseline.as_deref(), candidate.as_deref())?;
            print!(
                "{}",
                codeaware_core::evaluate::render_evaluation(&out.reports, Some(&out.comparison))
            );
        }
        Command::Pipeline => {
            let summary = commands::pipeline(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
        }
        Command::Report => print!("{}", commands::report(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
