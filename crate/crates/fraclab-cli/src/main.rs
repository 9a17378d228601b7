//! Configuration-driven experiment runner.
//!
//! Subcommands: `run <config.toml>` executes one experiment and writes its
//! artifacts plus `manifest.json` into the configured output directory
//! (exit status 0 iff every check passed); `validate <config.toml>` checks a
//! configuration without running; `report <dir>...` aggregates finished runs.
//! Thread count is controlled by `RAYON_NUM_THREADS` only.

mod artifacts;
mod config;
mod manifest;
mod pipeline;
mod report;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use artifacts::ArtifactSink;
use config::ExperimentConfig;
use manifest::{now_ms, sha256_hex, ArtifactRecord, RunManifest};

#[derive(Parser)]
#[command(name = "fraclab", version, about = "numerical laboratory for boundary control of the fractional heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a TOML configuration.
    Run { config: PathBuf },
    /// Validate a configuration without running it.
    Validate { config: PathBuf },
    /// Aggregate one or more finished run directories into a report.
    Report {
        dirs: Vec<PathBuf>,
        /// Write report.json / report.txt here instead of stdout only.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config } => run(&config),
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(cfg) => {
                println!("ok: {} experiment -> {}", cfg.kind.name(), cfg.output_dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("invalid configuration: {e}");
                ExitCode::from(2)
            }
        },
        Command::Report { dirs, out } => match report::aggregate(&dirs) {
            Ok(rep) => {
                let text = report::render_text(&rep);
                print!("{text}");
                if let Some(dir) = out {
                    if let Err(e) = write_report(&dir, &rep, &text) {
                        eprintln!("cannot write report: {e}");
                        return ExitCode::from(1);
                    }
                }
                if rep.all_passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("report failed: {e}");
                ExitCode::from(1)
            }
        },
    }
}

fn write_report(
    dir: &PathBuf,
    rep: &report::AggregateReport,
    text: &str,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(rep).unwrap())?;
    std::fs::write(dir.join("report.txt"), text)
}

fn run(config_path: &PathBuf) -> ExitCode {
    let started = now_ms();
    let raw = match std::fs::read(config_path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("cannot read {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match ExperimentConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid configuration: {e}");
            return ExitCode::from(2);
        }
    };
    let mut sink = match ArtifactSink::new(&cfg.output_dir) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot create output directory: {e}");
            return ExitCode::from(1);
        }
    };
    let checks = match pipeline::run_pipeline(&cfg, &mut sink) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("pipeline error [{}]: {e}", cfg.kind.name());
            return ExitCode::from(1);
        }
    };
    let passed = checks.iter().all(|c| c.passed);
    let manifest = RunManifest {
        schema: config::CONFIG_SCHEMA,
        kind: cfg.kind.name().to_string(),
        config_sha256: sha256_hex(&raw),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        artifacts: sink
            .manifest_entries()
            .iter()
            .map(|(name, sha256, bytes)| ArtifactRecord {
                name: name.clone(),
                sha256: sha256.clone(),
                bytes: *bytes,
            })
            .collect(),
        checks: checks.clone(),
        passed,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).unwrap();
    if let Err(e) = std::fs::write(cfg.output_dir.join("manifest.json"), manifest_json) {
        eprintln!("cannot write manifest: {e}");
        return ExitCode::from(1);
    }
    for check in &checks {
        println!(
            "[{}] {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    println!(
        "{}: {} artifacts in {}",
        if passed { "ok" } else { "FAILED" },
        sink.manifest_entries().len(),
        cfg.output_dir.display()
    );
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
