use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use epistemic_core::EngineConfig;
use epistemic_harness::{config_overrides, parse, replay_check, run, run_demo, DemoConfig, Seed};

#[derive(Parser)]
#[command(name = "epistemic", version, about = "Run and replay epistemic engine scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario script.
    Run {
        script: PathBuf,
        /// TOML engine config; its keys override the script's `config` lines.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        audit_out: Option<PathBuf>,
        #[arg(long)]
        metrics_out: Option<PathBuf>,
        /// Print the final state hash.
        #[arg(long)]
        hash: bool,
    },
    /// Re-run a scenario and compare against a recorded audit file.
    Replay {
        script: PathBuf,
        audit: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Built-in demos.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Reflect each tick and self-correct when coherence falls below the floor.
    SelfInjection {
        #[arg(long, default_value = "conflict")]
        seed: Seed,
        #[arg(long, default_value_t = 16)]
        ticks: u32,
        #[arg(long)]
        audit_out: Option<PathBuf>,
    },
}

/// Exit status 2: the inputs could not be parsed or configured.
struct Usage(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.into())
    }
}

fn overrides(config: Option<&Path>) -> Result<Vec<(String, String)>, Usage> {
    let Some(path) = config else {
        return Ok(Vec::new());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(config_overrides(&text)?)
}

fn load(script: &Path) -> Result<epistemic_harness::Scenario, Usage> {
    let text = fs::read_to_string(script).with_context(|| format!("reading {}", script.display()))?;
    parse(&text).map_err(|e| Usage(anyhow::Error::new(e).context(script.display().to_string())))
}

fn write(path: Option<&PathBuf>, contents: &str) -> anyhow::Result<()> {
    if let Some(path) = path {
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool, Usage> {
    match cli.command {
        Command::Run {
            script,
            config,
            audit_out,
            metrics_out,
            hash,
        } => {
            let scenario = load(&script)?;
            let out = run(&scenario, &overrides(config.as_deref())?)?;
            write(audit_out.as_ref(), &out.audit)?;
            write(metrics_out.as_ref(), &out.metrics)?;
            if hash {
                println!("{}", out.final_hash);
            }
            for failure in &out.expect_failures {
                eprintln!("FAIL {failure}");
            }
            let m = out.engine.metrics();
            eprintln!(
                "{}: {} audit records, tick {}, kappa {:.6}, lambda {}, {} expect failure(s)",
                script.display(),
                out.engine.audit().len(),
                m.tick,
                m.kappa,
                m.lambda,
                out.expect_failures.len()
            );
            Ok(out.passed())
        }
        Command::Replay { script, audit, config } => {
            let scenario = load(&script)?;
            let recorded = fs::read_to_string(&audit).with_context(|| format!("reading {}", audit.display()))?;
            let report = replay_check(&scenario, &overrides(config.as_deref())?, &recorded)?;
            match report.first_mismatch {
                None => println!("match"),
                Some(m) => {
                    println!("mismatch at line {}", m.line);
                    println!("  recorded: {}", m.recorded.as_deref().unwrap_or("<end of file>"));
                    println!("  replayed: {}", m.replayed.as_deref().unwrap_or("<end of file>"));
                }
            }
            Ok(report.matches)
        }
        Command::Demo {
            demo: Demo::SelfInjection { seed, ticks, audit_out },
        } => {
            let demo = DemoConfig {
                ticks,
                ..DemoConfig::default()
            };
            let report = run_demo(&seed.blueprints(), EngineConfig::default(), demo);
            write(audit_out.as_ref(), &report.audit)?;
            for r in &report.self_records {
                println!("{}", r.to_line());
            }
            for (tick, kappa) in &report.kappa_trace {
                println!("tick {tick} kappa {kappa:.6}");
            }
            println!(
                "self-injections: {} attempted, {} admitted; converged at tick {}",
                report.attempts(),
                report.admissions(),
                report
                    .converged_at()
                    .map_or_else(|| "never".to_string(), |t| t.to_string())
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
