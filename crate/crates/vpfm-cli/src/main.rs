use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vpfm_cli::bench::{parse_sweep, sweep, sweep_csv};
use vpfm_cli::config::{ConfigError, RunConfig, SceneName};
use vpfm_cli::driver::{describe, run, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "vpfm", version, about = "Vortex particle flow-map simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scene described by a TOML configuration file.
    Run {
        config: PathBuf,
        /// Exit with status 4 at the first explosion flag.
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value = "vpfm-out")]
        output_dir: PathBuf,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Log a progress line every N steps.
        #[arg(long, default_value_t = 0)]
        progress: usize,
    },
    /// Sweep the long flow-map length and report the failure frames.
    Bench {
        /// Scene name, e.g. leapfrog3d.
        scene: String,
        /// Values to sweep, e.g. nL=10,20,40,60.
        #[arg(long)]
        sweep: String,
        /// Optional configuration overriding the scene defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "vpfm-bench")]
        output_dir: PathBuf,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        /// Only run with the evolved Hessian (default runs with and without).
        #[arg(long)]
        hessian_only: bool,
    },
}

fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, RunError> {
    match workers {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| RunError::Config(ConfigError::Invalid(format!("worker pool: {e}"))))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run {
            config,
            strict,
            output_dir,
            max_steps,
            workers,
            progress,
        } => {
            let cfg = RunConfig::load(&config)?;
            let opts = RunOptions {
                output_dir,
                strict,
                max_steps,
                progress_every: progress,
            };
            let summary = with_workers(workers, || run(cfg, &opts))??;
            println!(
                "{}: {} steps, t = {:.4}, E/E0 = {:.6}, failure: {}{} ({:.1} s)",
                summary.scene,
                summary.steps,
                summary.time,
                summary.final_energy,
                describe(summary.failure),
                if summary.steady { ", steady" } else { "" },
                summary.wall_seconds
            );
            Ok(())
        }
        Command::Bench {
            scene,
            sweep: spec,
            config,
            output_dir,
            max_steps,
            workers,
            hessian_only,
        } => {
            let name = SceneName::parse(&scene)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown scene {scene:?}")))?;
            let mut cfg = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::for_scene(name),
            };
            if cfg.scene != name {
                return Err(ConfigError::Invalid(format!("config is for scene {}, not {name}", cfg.scene)).into());
            }
            if max_steps.is_some() {
                cfg.sim.max_steps = max_steps;
            }
            let values = parse_sweep(&spec)?;
            let hessian: &[bool] = if hessian_only { &[true] } else { &[true, false] };
            std::fs::create_dir_all(&output_dir).map_err(|e| RunError::Output(e.to_string()))?;
            let rows = with_workers(workers, || {
                sweep(&cfg, &values, hessian, |r| {
                    println!(
                        "nL = {:4} hessian = {:5}: {} ({} steps)",
                        r.n_long,
                        r.use_hessian,
                        describe(r.failure),
                        r.steps
                    )
                })
            })??;
            let path = output_dir.join("sweep.csv");
            std::fs::write(&path, sweep_csv(&rows)).map_err(|e| RunError::Output(format!("{}: {e}", path.display())))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
