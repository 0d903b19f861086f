//! `landscape`: batch front-end. Reads a JSON experiment config, runs one
//! construction or check, writes a JSON report (and CSV/certificate
//! artifacts) atomically into `--out`, and exits 0 on pass, 1 on a failed
//! assertion, 2 on a configuration error.

mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use crate::commands::{Context_, Outcome};
use crate::config::ExperimentConfig;

/// Marks errors caused by the configuration rather than by a failed check.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser)]
#[command(name = "landscape", version, about = "Spurious minima, saddles and instability certificates for conic approximation schemes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory for reports and artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Expressiveness witnesses for random unit labels.
    Witness,
    /// Heuristic Θ estimate next to the certified cap.
    Theta,
    /// Spurious-minimum certificate from a subspace embedding.
    Spurious,
    /// ± label pair at a point with zero first weight matrix.
    SaddlePair,
    /// Spurious minimum of the regularized problem.
    RegSpurious,
    /// Small labels cannot beat α = 0 under regularization.
    RegKill,
    /// Nonuniqueness crossing for regularized problems.
    Instability,
    /// Image clouds of the toy and linear schemes and the projection lab.
    Figure1,
    /// Diameter bound for points on a sphere around a hull point.
    Jung,
    /// Re-verify a stored certificate.
    Verify { certificate: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Witness => "witness",
            Command::Theta => "theta",
            Command::Spurious => "spurious",
            Command::SaddlePair => "saddle-pair",
            Command::RegSpurious => "reg-spurious",
            Command::RegKill => "reg-kill",
            Command::Instability => "instability",
            Command::Figure1 => "figure1",
            Command::Jung => "jung",
            Command::Verify { .. } => "verify",
        }
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).with_context(|| format!("writing {name}"))?;
    Ok(())
}

fn is_config_error(e: &anyhow::Error) -> bool {
    use landscape::Error as E;
    e.chain().any(|c| {
        c.is::<ConfigError>()
            || c.is::<serde_json::Error>()
            || matches!(
                c.downcast_ref::<E>(),
                Some(E::Dimension(_) | E::InvalidArgument(_) | E::Hypothesis(_) | E::Unsupported(_) | E::KnotOrder(_) | E::Json(_) | E::Csv(_))
            )
    })
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(cli.config.as_deref()).map_err(|e| ConfigError(format!("{e:#}")))?;
    let name = cli.command.name();
    cfg.check_command(name).map_err(|e| ConfigError(e.to_string()))?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let base = cli.config.as_deref().and_then(Path::parent).unwrap_or(Path::new(".")).to_path_buf();
    let ctx = Context_ { cfg: &cfg, seed, base: &base };
    let outcome = match &cli.command {
        Command::Witness => commands::witness(&ctx),
        Command::Theta => commands::theta(&ctx),
        Command::Spurious => commands::spurious(&ctx),
        Command::SaddlePair => commands::saddle_pair(&ctx),
        Command::RegSpurious => commands::reg_spurious(&ctx),
        Command::RegKill => commands::reg_kill(&ctx),
        Command::Instability => commands::instability(&ctx),
        Command::Figure1 => commands::figure1(&ctx),
        Command::Jung => commands::jung(&ctx),
        Command::Verify { certificate } => commands::verify(&ctx, certificate),
    }?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    for (file, bytes) in &outcome.artifacts {
        write_atomic(&cli.out, file, bytes)?;
    }
    let report = json!({ "command": name, "seed": seed, "pass": outcome.pass, "result": outcome.report });
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    write_atomic(&cli.out, &format!("{name}.json"), &bytes)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("{}: {}", cli.command.name(), if outcome.pass { "PASS" } else { "FAIL" });
            ExitCode::from(if outcome.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { 2 } else { 1 })
        }
    }
}
