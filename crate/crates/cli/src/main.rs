use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qthermo::config::PRESETS;
use qthermo::{load_config, run_experiment, thread_pool, write_outputs};

#[derive(Parser)]
#[command(name = "qthermo", version, about = "Work extraction from correlated quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the state presets.
    Presets,
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> Result<bool, String> {
    let text = std::fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
    let mut cfg = load_config(&text).map_err(|e| e.to_string())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    let pool = thread_pool()?;
    let mut output = pool.install(|| run_experiment(&cfg)).map_err(|e| e.to_string())?;
    let files = write_outputs(&mut output, &cfg.output_dir).map_err(|e| e.to_string())?;

    let m = &output.manifest;
    let failed: Vec<_> = m.identities.iter().filter(|c| !c.passed).collect();
    println!(
        "{}: {} identities, {} failed, {} errors ({:.2} s)",
        cfg.experiment.name(),
        m.identities.len(),
        failed.len(),
        m.errors.len(),
        m.wall_time_seconds
    );
    for c in &failed {
        println!(
            "  FAIL {} [{}]: residual {:e} > {:e}",
            c.name, c.point, c.residual, c.tolerance
        );
    }
    for e in &m.errors {
        println!("  ERROR {e}");
    }
    for f in files {
        println!("  wrote {}", f.display());
    }
    Ok(m.all_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            for p in PRESETS {
                println!("{:<18} {:<70} {}", p.name, p.parameters, p.description);
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed } => match run(config, out, seed) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
