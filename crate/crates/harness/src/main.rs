use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use slmap::tasks::{prepare_output_dir, run, write_outcome};
use slmap::{ExperimentConfig, HarnessError, Task};

/// Forward and inverse spectral experiments for Sturm-Liouville problems
/// with complex potentials.
#[derive(Debug, Parser)]
#[command(name = "slmap", version)]
struct Cli {
    task: Task,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Abort on any failed hypothesis check.
    #[arg(long)]
    strict: bool,
    /// Perturbation seed (overrides `perturbation.seed`).
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(cli: &Cli) -> Result<Option<String>, HarnessError> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    cfg.task = cli.task;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if cli.strict {
        cfg.hypotheses.strict = true;
    }
    if let Some(seed) = cli.seed {
        cfg.perturbation.seed = seed;
    }
    cfg.validate()?;
    prepare_output_dir(&cfg.output.dir)?;
    let outcome = run(&cfg)?;
    let written = write_outcome(&outcome, &cfg.output.dir)?;
    print!("{}", outcome.summary);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(outcome.failure)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(msg)) => {
            eprintln!("slmap: {msg}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("slmap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
