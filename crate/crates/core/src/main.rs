use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use curved_nbody::harness::{
    batch, builtin_scenarios, compare, diagnose, output_dir_for, run, scenario_from_arg, Overrides,
    RunArtifacts,
};

/// n-body simulations with the cotangent potential on spheres and hyperboloids.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Override the final time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Override both the relative and absolute tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory (default: the scenario's output_dir, else runs/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Project the initial positions and momenta onto the manifold.
    #[arg(long)]
    auto_renormalize: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            t_end: self.t_end,
            tol: self.tol,
            auto_renormalize: self.auto_renormalize,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario file (or a builtin by name) and write its artifacts.
    Simulate {
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run the full system and the projected systems side by side.
    Compare {
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run every applicable analysis on a stored run directory.
    Diagnose { run_dir: PathBuf },
    /// Run every *.toml scenario in a directory.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Worker threads (default: available processors).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the builtin scenario names, or one builtin as a scenario file.
    ListBuiltins {
        /// Print this builtin's scenario file.
        #[arg(long)]
        show: Option<String>,
    },
}

fn finish(art: &RunArtifacts, common: &Common) -> Result<()> {
    let dir = output_dir_for(&art.scenario, common.out.as_deref());
    art.write(&dir)
        .with_context(|| format!("writing {}", dir.display()))?;
    let t = &art.summary.termination;
    println!(
        "{}: {:?} at t = {} ({} samples) -> {}",
        art.scenario.name,
        t.reason,
        t.final_time,
        art.summary.samples,
        dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { scenario, common } => {
            let s = common.overrides().apply(scenario_from_arg(&scenario)?);
            finish(&run(&s)?, &common)?;
        }
        Command::Compare { scenario, common } => {
            let s = common.overrides().apply(scenario_from_arg(&scenario)?);
            let art = compare(&s)?;
            finish(&art, &common)?;
            if let Some(eq) = &art.summary.analyses.equivalence {
                println!("{}", serde_json::to_string_pretty(eq)?);
            }
        }
        Command::Diagnose { run_dir } => {
            let res = diagnose(&run_dir)?;
            let text = serde_json::to_string_pretty(&res)? + "\n";
            let path = run_dir.join("diagnosis.json");
            std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            print!("{text}");
        }
        Command::Batch { dir, common, jobs } => {
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
            let entries = batch(&dir, &out, jobs, &common.overrides())?;
            let mut failed = false;
            for e in &entries {
                match &e.result {
                    Ok(t) => println!(
                        "{}: {:?} at t = {} -> {}",
                        e.source.display(),
                        t.reason,
                        t.final_time,
                        e.out_dir.display()
                    ),
                    Err(err) => {
                        failed = true;
                        eprintln!("{}: {err}", e.source.display());
                    }
                }
            }
            if failed {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::ListBuiltins { show } => match show {
            Some(name) => {
                let s = scenario_from_arg(&name)?;
                print!("{}", s.to_toml());
            }
            None => {
                for s in builtin_scenarios() {
                    println!("{:<32} {}", s.name, s.description);
                }
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}
