//! Command-line front end: configuration-driven experiments with persisted,
//! reproducible outputs.

mod config;
mod experiments;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{apply_override, config_from_value, validate, Severity};

#[derive(Parser)]
#[command(name = "malab", about = "Markov-Anderson model laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config (or replay a manifest).
    Run {
        /// Path to the JSON configuration or a previous manifest.json.
        config: PathBuf,
        /// Dotted-path overrides, e.g. --set process.T=0.5
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Cap the worker-thread count.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory.
        #[arg(long, default_value = "runs")]
        outdir: PathBuf,
    },
    /// Static checks on a configuration without running it.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn load_config(
    path: &PathBuf,
    overrides: &[String],
) -> anyhow::Result<config::ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("invalid JSON in {}: {e}", path.display()))?;
    if let Some(inner) = value.get("config") {
        value = inner.clone();
    }
    for spec in overrides {
        apply_override(&mut value, spec)?;
    }
    config_from_value(value)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, set, threads, outdir } => {
            let cfg = match load_config(&config, &set) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("configuration error: {e:#}");
                    return ExitCode::from(2);
                }
            };
            // OpenBLAS kernels want roomy stacks on worker threads
            let mut pool = rayon::ThreadPoolBuilder::new().stack_size(32 * 1024 * 1024);
            if let Some(n) = threads {
                pool = pool.num_threads(n);
            }
            if let Err(e) = pool.build_global() {
                eprintln!("note: thread pool already initialized: {e}");
            }
            let diags = validate(&cfg);
            if diags.iter().any(|d| d.severity == Severity::Error) {
                for d in &diags {
                    eprintln!("{:?} [{}]: {}", d.severity, d.field, d.message);
                }
                eprintln!("configuration error: static validation failed");
                return ExitCode::from(2);
            }
            match experiments::run_with_sweep(&cfg, &outdir) {
                Ok((passed, manifests)) => {
                    for m in &manifests {
                        println!("{} [{}]: {}", m.experiment, &m.config_hash[..8], if m.passed { "PASS" } else { "FAIL" });
                        for c in &m.checks {
                            println!(
                                "  {} {}: {}",
                                if c.passed { "ok  " } else { "FAIL" },
                                c.name,
                                c.details
                            );
                        }
                    }
                    if passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("run failed: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Validate { config, set } => {
            let cfg = match load_config(&config, &set) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("configuration error: {e:#}");
                    return ExitCode::from(2);
                }
            };
            let diags = validate(&cfg);
            if diags.is_empty() {
                println!("configuration valid: no diagnostics");
                return ExitCode::SUCCESS;
            }
            for d in &diags {
                println!("{:?} [{}]: {}", d.severity, d.field, d.message);
            }
            if diags.iter().any(|d| d.severity == Severity::Error) {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
