use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spacedrl_cli::run::RunArgs;
use spacedrl_cli::{cmd_report, cmd_run, parse_seeds, CliError, Experiment};

#[derive(Debug, Parser)]
#[command(name = "spacedrl", version, about = "Forgetting and curriculum experiments on procedural gridworlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment for every configured seed.
    Run {
        /// forgetting, curriculum or crosstrain
        experiment: Experiment,
        #[arg(long)]
        config: PathBuf,
        /// Output directory; falls back to `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override seeds, e.g. `0..9` or `1,4,7`.
        #[arg(long)]
        seeds: Option<String>,
        /// Write an SVG chart next to each eval trace.
        #[arg(long)]
        svg: bool,
        /// Seeds to run concurrently.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Aggregate results directories into report.csv and report.md.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            experiment,
            config,
            out,
            seeds,
            svg,
            jobs,
        } => seeds
            .as_deref()
            .map(parse_seeds)
            .transpose()
            .map_err(|e| CliError::Usage(format!("--seeds: {e}")))
            .and_then(|seeds| {
                cmd_run(&RunArgs {
                    experiment: Some(experiment),
                    config,
                    out,
                    seeds,
                    svg,
                    jobs,
                })
            })
            .map(|o| {
            for r in o.manifest.runs.iter().filter(|r| r.error.is_some()) {
                eprintln!("run {} failed: {}", r.run_id, r.error.as_deref().unwrap_or_default());
            }
            eprintln!("results written to {}", o.out_dir.display());
            if o.all_completed() {
                0
            } else {
                1
            }
        }),
        Command::Report { dirs, out } => cmd_report(&dirs, &out).map(|r| {
            if !r.tally.is_empty() {
                eprintln!("forgetting classes: {}", r.tally_line());
            }
            eprintln!("report written to {}", out.display());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}

