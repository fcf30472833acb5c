//! Scenario runner for the particle robot library.
//!
//! Subcommands: `run`, `compare`, `optimize`, `swarm`. Each loads a JSON
//! scenario, executes it deterministically, and writes a trajectory CSV and
//! a summary JSON into the output directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use particle_robot::scenario::{self, Scenario, ScenarioKind};

#[derive(Parser)]
#[command(name = "particle-robot", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Output directory for trajectory and summary files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the timestep, milliseconds.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a locomotion, optimize, or swarm scenario.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run two scenarios with identical seeds and report the displacement
    /// ratio b/a.
    Compare {
        scenario_a: PathBuf,
        scenario_b: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Optimize the scenario's gait pattern, then run the best pattern.
    Optimize {
        scenario: PathBuf,
        /// Evaluation budget; overrides the scenario file.
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run a swarm scenario.
    Swarm {
        scenario: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

fn load(path: &Path, opts: &CommonOpts) -> Result<Scenario> {
    let mut scenario = scenario::load_scenario(path)
        .with_context(|| format!("loading scenario {}", path.display()))?;
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    if let Some(dt_ms) = opts.dt {
        scenario.set_dt_ms(dt_ms)?;
    }
    Ok(scenario)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, opts } => {
            let s = load(&scenario, &opts)?;
            let summary = scenario::run(&s, &opts.out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Compare {
            scenario_a,
            scenario_b,
            opts,
        } => {
            let a = load(&scenario_a, &opts)?;
            let b = load(&scenario_b, &opts)?;
            let report = scenario::compare(&a, &b, &opts.out)?;
            let text = serde_json::to_string_pretty(&report)?;
            let path = opts.out.join(format!("{}_vs_{}_compare.json", a.name, b.name));
            std::fs::write(&path, format!("{text}\n"))
                .with_context(|| format!("writing {}", path.display()))?;
            println!("{text}");
        }
        Command::Optimize {
            scenario,
            budget,
            opts,
        } => {
            let mut s = load(&scenario, &opts)?;
            if s.kind != ScenarioKind::Optimize {
                bail!(
                    "{} is a {:?} scenario; `optimize` needs kind = \"optimize\"",
                    scenario.display(),
                    s.kind
                );
            }
            if let Some(budget) = budget {
                if budget == 0 {
                    bail!("budget must be at least 1");
                }
                s.budget = budget;
            }
            let summary = scenario::run(&s, &opts.out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Swarm { scenario, opts } => {
            let s = load(&scenario, &opts)?;
            if s.kind != ScenarioKind::Swarm {
                bail!(
                    "{} is a {:?} scenario; `swarm` needs kind = \"swarm\"",
                    scenario.display(),
                    s.kind
                );
            }
            let summary = scenario::run(&s, &opts.out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}
