use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdyn_scenarios::bench::{bench, BenchConfig, BenchModel};
use qdyn_scenarios::demos::{run_demo, DEMOS};
use qdyn_scenarios::scenario::{
    run_scenario, sidecar, write_file, write_outputs, RunOptions, ScenarioSpec, SolverKind,
};
use qdyn_scenarios::{Result, ScenarioError};

#[derive(Parser)]
#[command(
    name = "qdyn",
    version,
    about = "Open quantum system dynamics from scenario files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario file and write a CSV plus metadata sidecar.
    Run {
        file: PathBuf,
        /// Output CSV; defaults to `<scenario name>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        solver: Option<SolverKind>,
        #[arg(long)]
        ntraj: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run one of the built-in calculations.
    Demo {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Use the full reference system sizes instead of the CI sizes.
        #[arg(long)]
        full_scale: bool,
    },
    /// Time a model over a sweep of sizes and print a JSON report.
    Bench {
        model: BenchModel,
        /// Comma-separated sizes: states per mode, or spins.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value = "me")]
        solver: SolverKind,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value_t = 100)]
        ntraj: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            file,
            out,
            solver,
            ntraj,
            seed,
            workers,
        } => {
            let spec = ScenarioSpec::load(&file)?;
            let opts = RunOptions {
                solver,
                ntraj,
                seed,
                workers,
                ..RunOptions::default()
            };
            let output = run_scenario(&spec, &opts)?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.name)));
            for p in write_outputs(&out, &spec, &output)? {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Demo {
            name,
            out,
            full_scale,
        } => {
            if !DEMOS.contains(&name.as_str()) {
                return Err(ScenarioError::Usage(format!(
                    "unknown demo `{name}`; available: {}",
                    DEMOS.join(", ")
                )));
            }
            let report = run_demo(&name, full_scale)?;
            for a in &report.artifacts {
                let p = out.join(&a.file);
                write_file(&p, &a.contents)?;
                eprintln!("wrote {}", p.display());
            }
            let meta = sidecar(&out.join(name.replace('-', "_")), "meta.json");
            write_file(&meta, &serde_json::to_string_pretty(&report.meta)?)?;
            eprintln!("wrote {}", meta.display());
        }
        Command::Bench {
            model,
            dims,
            solver,
            workers,
            ntraj,
            seed,
        } => {
            let report = bench(&BenchConfig {
                model,
                sizes: dims,
                solver,
                workers,
                ntraj,
                master_seed: seed,
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
