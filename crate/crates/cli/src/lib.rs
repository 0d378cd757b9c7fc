//! Config-driven experiment runner: presets, sweeps, identity audits and
//! CSV/JSON/SVG output.

pub mod config;
pub mod emit;
pub mod run;

pub use config::{load_config, ConfigError, ExperimentConfig};
pub use run::{run_experiment, write_outputs, RunError, RunManifest, RunOutput};

/// Worker-count cap read from `QTHERMO_THREADS`.
pub const THREADS_VAR: &str = "QTHERMO_THREADS";

pub fn thread_pool() -> Result<rayon::ThreadPool, String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| format!("{THREADS_VAR} must be a positive integer, got {v:?}"))?;
        if n == 0 {
            return Err(format!("{THREADS_VAR} must be positive"));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| e.to_string())
}
