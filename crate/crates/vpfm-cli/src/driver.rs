//! Stepping loop with diagnostics, grid dumps and run summaries.

use crate::config::{ConfigError, RunConfig, SceneName};
use crate::scenes::{init_scene, BuildError, Sim};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;
use vpfm::diagnostics::{cavity_probe, failure_scan, ghia_reference, DiagnosticsRecord, FailurePoint};
use vpfm::dynamics::{DynamicsError, SimState, StepReport};
use vpfm::grid::write_dump;
use vpfm::Real;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("output error: {0}")]
    Output(String),
    #[error("explosion failure at frame {frame} (normalized energy {energy:.4})")]
    Explosion { frame: usize, energy: f64 },
}

impl From<BuildError> for RunError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::Config(c) => RunError::Config(c),
            BuildError::Dynamics(DynamicsError::Config(m)) => RunError::Config(ConfigError::Invalid(m)),
            BuildError::Dynamics(d) => RunError::Dynamics(d),
        }
    }
}

impl RunError {
    /// Process exit status: 2 configuration, 3 solver failure, 4 explosion.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Dynamics(DynamicsError::Config(_)) => 2,
            RunError::Dynamics(_) => 3,
            RunError::Output(_) => 1,
            RunError::Explosion { .. } => 4,
        }
    }
}

fn out_err(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Output(format!("{}: {e}", path.display()))
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    /// Stop and fail at the first explosion flag.
    pub strict: bool,
    pub max_steps: Option<usize>,
    /// Print a progress line every this many steps (0 for none).
    pub progress_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub scene: SceneName,
    pub steps: usize,
    pub time: f64,
    pub final_energy: f64,
    pub failure: FailurePoint,
    pub steady: bool,
    pub wall_seconds: f64,
    /// Normalized energy per frame, frame 0 first.
    pub energy: Vec<f64>,
}

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const EFFECTIVE_CONFIG_FILE: &str = "effective_config.toml";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const CAVITY_PROBE_FILE: &str = "cavity_probe.txt";

/// Header of the diagnostics CSV: the diagnostics record followed by the
/// step report.
pub fn diagnostics_header() -> String {
    format!("{},{}", DiagnosticsRecord::CSV_HEADER, StepReport::CSV_HEADER)
}

/// Resolves `cfg`, applies the option overrides, writes the effective
/// configuration and runs the scene.
pub fn run(cfg: RunConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let mut cfg = cfg;
    if let Some(n) = opts.max_steps {
        cfg.sim.max_steps = Some(n);
    }
    let cfg = cfg.resolve()?;
    fs::create_dir_all(&opts.output_dir).map_err(|e| out_err(&opts.output_dir, e))?;
    let eff = opts.output_dir.join(EFFECTIVE_CONFIG_FILE);
    fs::write(&eff, cfg.to_toml()).map_err(|e| out_err(&eff, e))?;
    let sim = init_scene(&cfg)?;
    match sim {
        Sim::Planar(s) => {
            let (summary, state) = drive(s, &cfg, opts)?;
            if cfg.scene == SceneName::Cavity {
                write_cavity_probe(&state, &cfg, &opts.output_dir)?;
            }
            Ok(summary)
        }
        Sim::Spatial(s) => Ok(drive(s, &cfg, opts)?.0),
    }
}

struct Outputs {
    dir: PathBuf,
    csv: fs::File,
    every: usize,
}

impl Outputs {
    fn dump<const D: usize>(&self, state: &SimState<f64, D>, tag: &str) -> Result<(), RunError> {
        let desc = state.desc();
        for (name, field) in [("omega", &state.omega), ("u", &state.u)] {
            let p = self.dir.join(format!("{name}_{tag}.grid"));
            write_dump(&p, desc, name, field).map_err(|e| out_err(&p, e))?;
        }
        Ok(())
    }
}

fn drive<const D: usize>(
    mut state: SimState<f64, D>,
    cfg: &RunConfig,
    opts: &RunOptions,
) -> Result<(RunSummary, SimState<f64, D>), RunError> {
    let started = Instant::now();
    let csv_path = opts.output_dir.join(DIAGNOSTICS_FILE);
    let mut out = Outputs {
        dir: opts.output_dir.clone(),
        csv: fs::File::create(&csv_path).map_err(|e| out_err(&csv_path, e))?,
        every: cfg.output.every.unwrap_or(0),
    };
    writeln!(out.csv, "{}", diagnostics_header()).map_err(|e| out_err(&csv_path, e))?;
    if out.every > 0 {
        out.dump(&state, "000000")?;
    }
    let steady_tol = cfg.output.steady_tol.unwrap_or(0.0);
    let mut steady = false;
    let mut failure: Option<RunError> = None;
    let mut energy_hist: Vec<(f64, f64)> = vec![(0.0, state.diagnostics[0].kinetic_energy)];
    let window = state.config.n_long.max(1);

    let result = state.run_observed(|s, report| {
        let rec = s.diagnostics.last().expect("one record per step");
        if let Err(e) = writeln!(out.csv, "{},{}", rec.csv_row(), report.csv_row()) {
            failure = Some(out_err(&csv_path, e));
            return false;
        }
        if out.every > 0 && rec.frame % out.every == 0 {
            if let Err(e) = out.dump(s, &format!("{:06}", rec.frame)) {
                failure = Some(e);
                return false;
            }
        }
        if opts.progress_every > 0 && rec.frame % opts.progress_every == 0 {
            log::info!(
                "frame {} t = {:.4} dt = {:.3e} E/E0 = {:.6} div = {:.2e}",
                rec.frame,
                rec.time,
                report.dt,
                rec.normalized_energy,
                rec.max_abs_div
            );
        }
        if opts.strict && rec.explosion_failed {
            failure = Some(RunError::Explosion {
                frame: rec.frame,
                energy: rec.normalized_energy,
            });
            return false;
        }
        energy_hist.push((rec.time, rec.kinetic_energy));
        // steady state: energy change over a reinitialization window
        if steady_tol > 0.0 && energy_hist.len() > window {
            let (t0, e0) = energy_hist[energy_hist.len() - 1 - window];
            let (t1, e1) = (rec.time, rec.kinetic_energy);
            if t1 > t0 && e1 > 0.0 && ((e1 - e0) / (t1 - t0)).abs() < steady_tol * e1 {
                steady = true;
                return false;
            }
        }
        true
    });
    out.csv.flush().map_err(|e| out_err(&csv_path, e))?;
    if let Some(e) = failure {
        if let RunError::Explosion { .. } = e {
            out.dump(&state, "final")?;
            write_summary(&state, cfg, opts, steady, started)?;
        }
        return Err(e);
    }
    result?;
    out.dump(&state, "final")?;
    let summary = write_summary(&state, cfg, opts, steady, started)?;
    Ok((summary, state))
}

fn write_summary<const D: usize>(
    state: &SimState<f64, D>,
    cfg: &RunConfig,
    opts: &RunOptions,
    steady: bool,
    started: Instant,
) -> Result<RunSummary, RunError> {
    let energy: Vec<f64> = state.diagnostics.iter().map(|r| r.normalized_energy).collect();
    let last = state.diagnostics.last().expect("frame 0 record");
    let summary = RunSummary {
        scene: cfg.scene,
        steps: state.steps_taken(),
        time: state.time.as_f64(),
        final_energy: last.normalized_energy,
        failure: failure_scan(&energy).summary(),
        steady,
        wall_seconds: started.elapsed().as_secs_f64(),
        energy,
    };
    let mut text = String::new();
    let _ = writeln!(text, "scene = {}", summary.scene);
    let _ = writeln!(text, "steps = {}", summary.steps);
    let _ = writeln!(text, "time = {:.9e}", summary.time);
    let _ = writeln!(text, "normalized_energy = {:.9e}", summary.final_energy);
    let _ = writeln!(text, "failure = {}", describe(summary.failure));
    let _ = writeln!(text, "steady = {}", summary.steady);
    let _ = writeln!(text, "wall_seconds = {:.3}", summary.wall_seconds);
    let p = opts.output_dir.join(SUMMARY_FILE);
    fs::write(&p, text).map_err(|e| out_err(&p, e))?;
    Ok(summary)
}

pub fn describe(f: FailurePoint) -> String {
    match f {
        FailurePoint::None => "none".into(),
        FailurePoint::Dissipation(k) => format!("dissipation@{k}"),
        FailurePoint::Explosion(k) => format!("explosion@{k}"),
    }
}

fn write_cavity_probe(state: &SimState<f64, 2>, cfg: &RunConfig, dir: &Path) -> Result<(), RunError> {
    let re = cfg.flow.re.unwrap_or_else(|| {
        let nu = cfg.flow.nu.unwrap_or(0.0);
        if nu > 0.0 {
            cfg.flow.lid_speed.unwrap_or(1.0) * cfg.grid.length.unwrap_or(1.0) / nu
        } else {
            f64::INFINITY
        }
    });
    let p = cavity_probe(state, re);
    let mut text = String::new();
    let _ = writeln!(text, "re = {re}");
    let _ = writeln!(text, "time = {:.6}", state.time);
    let _ = writeln!(text, "lid_mid_vorticity = {:.6}", p.lid_mid_vorticity);
    let _ = writeln!(text, "u_min = {:.6}", p.u_min);
    let _ = writeln!(text, "v_max = {:.6}", p.v_max);
    let _ = writeln!(text, "v_min = {:.6}", p.v_min);
    if let Some(r) = ghia_reference(re) {
        let _ = writeln!(text, "reference_lid_mid_vorticity = {:.6}", r.lid_mid_vorticity);
        let _ = writeln!(text, "reference_u_min = {:.6}", r.u_min);
        let _ = writeln!(text, "reference_v_max = {:.6}", r.v_max);
        let _ = writeln!(text, "reference_v_min = {:.6}", r.v_min);
        let _ = writeln!(text, "max_relative_error = {:.6}", p.max_relative_error(&r));
    }
    let path = dir.join(CAVITY_PROBE_FILE);
    fs::write(&path, text).map_err(|e| out_err(&path, e))
}
