use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use recourse::{run, write_outputs, CliError, CommandKind, RunConfig, Settings};

/// Counterfactual explanations for linear SVMs.
#[derive(Parser)]
#[command(name = "recourse", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Args {
    /// TOML file with defaults for any flag (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a linear SVM; writes model.json and train_summary.json.
    Train(Args),
    /// Explain selected rows; writes explain.{txt,json} and CSV reports.
    Explain(Args),
    /// Compare methods with the percentile cost functions.
    Bench(Args),
    /// Aggregate counterfactuals over the undesirably predicted cohort.
    Audit(Args),
    /// Write a synthetic dataset and its schema.
    Generate(Args),
}

fn execute(kind: CommandKind, args: Args) -> Result<String, CliError> {
    let cfg = RunConfig::resolve(kind, args.settings, args.config.as_deref())?;
    let out = run(&cfg)?;
    for path in write_outputs(&cfg.out, &out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(out.summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Cmd::Train(a) => (CommandKind::Train, a),
        Cmd::Explain(a) => (CommandKind::Explain, a),
        Cmd::Bench(a) => (CommandKind::Bench, a),
        Cmd::Audit(a) => (CommandKind::Audit, a),
        Cmd::Generate(a) => (CommandKind::Generate, a),
    };
    let start = Instant::now();
    match execute(kind, args) {
        Ok(summary) => {
            eprintln!("{summary}");
            eprintln!("{} finished in {:.3}s", kind.as_str(), start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::FAILURE
        }
    }
}
