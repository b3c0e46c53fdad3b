use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use crib_cli::compare::compare;
use crib_cli::error::CliError;
use crib_cli::{load_config, output_dir, run_config, OUT_DIR_ENV};

/// Photon-echo quantum memory simulator.
#[derive(Parser, Debug)]
#[command(name = "crib", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario config and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Default output root when neither --out nor the config names one.
        #[arg(long = "out-root", env = OUT_DIR_ENV, hide = true)]
        out_root: Option<PathBuf>,
    },
    /// Compare two `t,re,im` traces by fidelity.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        tol: f64,
    },
}

fn run(config: &Path, out: Option<&Path>, threads: Option<usize>, out_root: Option<&Path>) -> Result<bool, CliError> {
    let cfg = load_config(config)?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Schema("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(CliError::runtime)?;
    }
    let dir = output_dir(&cfg, config, out, out_root);
    let start = Instant::now();
    let result = run_config(&cfg, config)?;
    result.write(&dir)?;
    for a in &result.summary.assertions {
        let value = a.value.map_or("missing".to_string(), |v| format!("{v:.6e}"));
        println!("{} {} = {value}", a.status, a.metric);
    }
    println!(
        "{} {} in {:.2} s, artifacts in {}",
        result.summary.status,
        result.summary.scenario,
        start.elapsed().as_secs_f64(),
        dir.display()
    );
    Ok(result.summary.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, threads, out_root } => run(&config, out.as_deref(), threads, out_root.as_deref()),
        Command::Compare { a, b, tol } => compare(&a, &b, tol).map(|c| {
            println!("{}", serde_json::to_string_pretty(&c).expect("numbers serialize"));
            c.pass
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
