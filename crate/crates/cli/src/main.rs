use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use gchain_cli::presets::{preset, PRESETS};
use gchain_cli::{run_config, Experiment, ExperimentConfig, Overrides, PastSpec, RunOptions};

const CSV_HELP: &str = "\
CSV exports (one per experiment, numbers at 17 significant digits):
  weak-l2        N,mean,se,q10,q25,median,q75,q90
  p-weak-l2      pair,verdict,medianSlope,finalMedian,finalMean
  tv-decay       n,exact,monteCarlo,mcCiLow,mcCiHigh,couplingTail,couplingCiHigh
  coupling-tail  n,tailEstimate,ciLow,ciHigh,replicas,censored
  beta-mixing    n,raw,ciLow,ciHigh,isotonic
  correlations   j,gamma,se,ciLow,ciHigh,absPartialSum
  criteria-scan  k,variation,variationBound,oscillation,oscillationBound
  oracle-check   n,squaredIncrement,hellingerIncrement";

#[derive(Parser)]
#[command(name = "gchain", version, about = "Uniqueness and mixing diagnostics for chains of infinite order", after_help = CSV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file or a preset and write its report and CSVs.
    Run {
        /// Path to a JSON configuration.
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Output directory.
        #[arg(long, env = "GCHAIN_OUT_DIR", default_value = "gchain-out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Exit with status 2 when any verdict is inconclusive.
        #[arg(long)]
        strict: bool,
        /// Replace the configured seed; echoed in the report.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the preset catalogue.
    ListPresets {
        #[arg(long)]
        json: bool,
    },
    /// Check a configuration file against the schema.
    ValidateConfig { config: PathBuf },
    /// Run the exact-oracle self checks for the model of a configuration or preset.
    OracleCheck {
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long, default_value_t = 10)]
        t1: usize,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn load(config: Option<PathBuf>, preset_name: Option<String>) -> Result<Vec<ExperimentConfig>> {
    match (config, preset_name) {
        (Some(path), None) => Ok(vec![ExperimentConfig::from_file(&path)?]),
        (None, Some(name)) => preset(&name).with_context(|| format!("unknown preset `{name}`; see `gchain list-presets`")),
        _ => bail!("give either a configuration path or --preset"),
    }
}

fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run { config, preset, out, workers, strict, seed } => {
            let mut inconclusive = false;
            for cfg in load(config, preset)? {
                let report = run_config(&cfg, &RunOptions { workers, overrides: Overrides { seed } })?;
                for path in report.write_to(&out).with_context(|| format!("writing to {}", out.display()))? {
                    println!("{}", path.display());
                }
                for r in &report.payload.results {
                    for v in &r.verdicts {
                        println!("{} [{}] {}: {}", cfg.name, r.kind, v.name, v.value);
                    }
                }
                inconclusive |= report.any_inconclusive();
            }
            Ok(if strict && inconclusive { 2 } else { 0 })
        }
        Command::ListPresets { json } => {
            if json {
                println!("{}", serde_json::to_string_pretty(&PRESETS)?);
            } else {
                for p in PRESETS {
                    println!("{:<22} {}", p.name, p.summary);
                }
            }
            Ok(0)
        }
        Command::ValidateConfig { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            println!("{}: ok ({} experiments)", cfg.name, cfg.experiments.len());
            Ok(0)
        }
        Command::OracleCheck { config, preset, t1, horizon, workers } => {
            let mut failed = false;
            for mut cfg in load(config, preset)? {
                cfg.name = format!("{}-oracle", cfg.name);
                cfg.experiments = vec![Experiment::OracleCheck {
                    past_x: PastSpec::Named(gchain_cli::config::NamedPast::Plus),
                    past_y: PastSpec::Named(gchain_cli::config::NamedPast::Minus),
                    t1,
                    horizon,
                    budget: gchain::oracle::DEFAULT_BUDGET,
                }];
                let report = run_config(&cfg, &RunOptions { workers, ..Default::default() })?;
                println!("{}", serde_json::to_string_pretty(&report.payload.results)?);
                failed |= report.payload.results.iter().flat_map(|r| &r.verdicts).any(|v| v.value == "violated");
            }
            Ok(if failed { 1 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
