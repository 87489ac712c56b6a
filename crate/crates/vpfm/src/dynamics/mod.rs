//! Time integration of the particle flow-map vorticity solver.
//!
//! One [`SimState::step`] runs, in order: long-map reinitialization, short-map
//! reinitialization, time-step selection, solid voxelization, the midpoint
//! velocity estimate, RK4 marching of positions and maps, push-forward plus
//! P2G, explicit forces and diffusion on the grid, the vector-potential and
//! cut-cell harmonic solves, and finally the path-integral accumulation that
//! maps penalization, viscous and force increments back onto the particles'
//! initial vorticity. Every phase is appended to [`SimState::phase_log`].

mod config;

pub use config::{Force, InstabilityPolicy, LambdaPolicy, SimConfig, WallVorticity};

use crate::diagnostics::{kinetic_energy, DiagnosticsRecord};
use crate::elliptic::{curl_psi, CutCellInput, HarmonicSolver, SolverError, SolverStats, VectorPotentialSolver};
use crate::flowmap::{
    connect_jacobians, push_forward_gradient, push_forward_vorticity, rk4_march, Instability, SegmentClock,
    VortexParticle,
};
use crate::grid::{
    curl_face_to_vort, for_each_index, laplacian_edge, sample_array, sample_velocity, sample_velocity_jet,
    sample_vorticity, Ghost, GridDesc, Layout, StaggeredArray, StaggeredField,
};
use crate::solids::{penalization_velocity, penalization_vorticity, voxelize, SolidMasks};
use crate::transfer::{g2p, p2g, reseed_uniform, ParticleSample, Segment, TransferError, TransferWorkspace};
use crate::Real;
use rayon::prelude::*;
use thiserror::Error;

/// Phases of one step, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    LongReinit,
    ShortReinit,
    TimeStep,
    Voxelize,
    Midpoint,
    March,
    AdvectP2g,
    ForcesDiffusion,
    VectorPotential,
    Harmonic,
    PathIntegral,
}

/// State summary attached to step errors.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Snapshot {
    /// Index of the step that failed (1-based).
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub max_velocity: f64,
    pub max_vorticity: f64,
    pub kinetic_energy: f64,
    pub num_particles: usize,
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{phase:?} solve failed at step {} (t = {:.6}): {source}", .snapshot.step, .snapshot.time)]
    Solver {
        phase: Phase,
        source: SolverError,
        snapshot: Snapshot,
    },
    #[error("flow-map instability ({kind:?}) on {count} particles at step {} (t = {:.6})", .snapshot.step, .snapshot.time)]
    Instability {
        kind: Instability,
        count: usize,
        snapshot: Snapshot,
    },
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

/// Per-step bookkeeping beyond the diagnostics record.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    /// Largest iteration count over the vector-potential components.
    pub psi_iterations: usize,
    pub harmonic_iterations: usize,
    /// Largest final relative residual over all solves of the step.
    pub max_residual: f64,
    pub uncovered_fraction: f64,
    pub reinitialized_particles: usize,
    pub viscous_limit_exceeded: bool,
    pub lambda: f64,
}

impl StepReport {
    pub const CSV_HEADER: &'static str =
        "dt,psi_iterations,harmonic_iterations,max_residual,uncovered_fraction,reinitialized_particles";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.9e},{},{},{:.3e},{:.4e},{}",
            self.dt,
            self.psi_iterations,
            self.harmonic_iterations,
            self.max_residual,
            self.uncovered_fraction,
            self.reinitialized_particles
        )
    }
}

struct Reconstruction<T, const D: usize> {
    psi: StaggeredField<T, D>,
    u: StaggeredField<T, D>,
    phi: StaggeredArray<T, D>,
    psi_stats: Vec<SolverStats>,
    harmonic_stats: SolverStats,
}

fn reconstruct<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    vp: &mut VectorPotentialSolver<T, D>,
    harmonic: &mut HarmonicSolver<T, D>,
    masks: &SolidMasks<T, D>,
    u_solid: &StaggeredField<T, D>,
    omega: &StaggeredField<T, D>,
) -> Result<Reconstruction<T, D>, (Phase, SolverError)> {
    let (psi, psi_stats) = vp.solve(omega).map_err(|e| (Phase::VectorPotential, e))?;
    let u_omega = curl_psi(desc, &psi);
    let out = harmonic
        .solve(&CutCellInput {
            u_omega: &u_omega,
            alpha: &masks.alpha,
            chi_in: &masks.chi_in,
            u_solid,
        })
        .map_err(|e| (Phase::Harmonic, e))?;
    Ok(Reconstruction {
        psi,
        u: out.u,
        phi: out.phi,
        psi_stats,
        harmonic_stats: out.stats,
    })
}

/// Normal velocity imposed where the fluid does not reach: the solid face
/// velocity, overridden by the far-field normal component on the walls.
pub fn imposed_velocity<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    masks: &SolidMasks<T, D>,
    inflow: &[T; D],
) -> StaggeredField<T, D> {
    let mut us = masks.u_sn.clone();
    for a in 0..D {
        let arr = &mut us.comps[a];
        let shape = arr.shape;
        let data = &mut arr.data;
        for_each_index(shape, |k, i| {
            if i[a] == 0 || i[a] == desc.cells[a] {
                data[k] = inflow[a];
            }
        });
    }
    us
}

/// `dt * nu * lap(omega)` on every vorticity sample off the node-axis walls.
/// Logs a warning when `nu dt / dx^2` exceeds the explicit limit `1 / (2 D)`.
pub fn viscosity_increment<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    omega: &StaggeredField<T, D>,
    nu: T,
    dt: T,
) -> StaggeredField<T, D> {
    let mut out = StaggeredField::zeros(desc, Layout::Vorticity);
    if nu == T::zero() {
        return out;
    }
    if viscous_limit_exceeded(desc, nu, dt) {
        log::warn!(
            "explicit diffusion beyond its stability limit: nu dt / dx^2 = {:.3} > {:.3}",
            (nu * dt / (desc.dx * desc.dx)).as_f64(),
            0.5 / D as f64
        );
    }
    let s = nu * dt;
    for c in 0..omega.num_comps() {
        let lap = laplacian_edge(desc, omega, c, Ghost::Mirror);
        out.comps[c].data.iter_mut().zip(&lap.data).for_each(|(o, l)| *o = s * *l);
    }
    out
}

fn viscous_limit_exceeded<T: Real, const D: usize>(desc: &GridDesc<T, D>, nu: T, dt: T) -> bool {
    nu * dt / (desc.dx * desc.dx) > T::lit(0.5 / D as f64)
}

/// Discrete curl of a body force sampled at the faces.
pub fn force_curl<T: Real, const D: usize>(desc: &GridDesc<T, D>, force: &Force<T, D>) -> StaggeredField<T, D> {
    if force.is_none() {
        return StaggeredField::zeros(desc, Layout::Vorticity);
    }
    let f = StaggeredField::from_fn(desc, Layout::Velocity, |c, x| force.eval(&x)[c]);
    curl_face_to_vort(desc, &f)
}

/// Semi-Lagrangian transport of `omega` over `tau` along `u` (RK2 backtrace),
/// applied as the increment `S(x_back) - S(x)` of the kernel-sampled field
/// `S`; in 3D the stretching term `tau (omega . grad) u` is added.
pub fn advect_vorticity<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
    omega: &StaggeredField<T, D>,
    tau: T,
) -> StaggeredField<T, D> {
    let half = tau * T::lit(0.5);
    let mut out = omega.clone();
    for (c, arr) in out.comps.iter_mut().enumerate() {
        let src = &omega.comps[c];
        let probe = StaggeredArray::<T, D> {
            shape: arr.shape,
            stagger: arr.stagger,
            data: Vec::new(),
        };
        arr.data.par_iter_mut().enumerate().for_each(|(k, v)| {
            let x = probe.position(desc, probe.multi_index(k));
            let u0 = sample_velocity(desc, u, &x);
            let xm: [T; D] = std::array::from_fn(|a| x[a] - half * u0[a]);
            let um = sample_velocity(desc, u, &xm);
            let xb: [T; D] = std::array::from_fn(|a| x[a] - tau * um[a]);
            // increment form: the kernel's smoothing cancels and tau = 0 is exact
            let mut w = *v + sample_array(desc, src, &xb) - sample_array(desc, src, &x);
            if D == 3 {
                let (wx, _) = sample_vorticity(desc, omega, &x);
                let jet = sample_velocity_jet(desc, u, &x, false);
                w += tau * (0..D).map(|j| wx[j] * jet.grad[c][j]).sum::<T>();
            }
            *v = w;
        });
    }
    out
}

/// Midpoint velocity: vorticity transported half a step along `u_c`, then
/// rebuilt through the same vector-potential and cut-cell solves.
pub fn midpoint_velocity<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    vp: &mut VectorPotentialSolver<T, D>,
    harmonic: &mut HarmonicSolver<T, D>,
    masks: &SolidMasks<T, D>,
    u_solid: &StaggeredField<T, D>,
    u_c: &StaggeredField<T, D>,
    omega_c: &StaggeredField<T, D>,
    dt: T,
) -> Result<StaggeredField<T, D>, SolverError> {
    let half = advect_vorticity(desc, u_c, omega_c, dt * T::lit(0.5));
    reconstruct(desc, vp, harmonic, masks, u_solid, &half)
        .map(|r| r.u)
        .map_err(|(_, e)| e)
}

/// Thom wall vorticity for planar no-slip walls from the streamfunction
/// (zero on the walls); corners are set to zero.
pub fn thom_wall_vorticity<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    psi: &StaggeredField<T, D>,
    lid_speed: T,
    omega: &mut StaggeredField<T, D>,
) {
    assert_eq!(D, 2, "Thom walls are planar");
    let (nx, ny) = (desc.cells[0], desc.cells[1]);
    let h = desc.dx;
    let c = T::lit(-2.0) / (h * h);
    let ix = |i: usize, j: usize| -> [usize; D] {
        let mut a = [0; D];
        a[0] = i;
        a[1] = j;
        a
    };
    let p = &psi.comps[0];
    let w = &mut omega.comps[0];
    for i in 1..nx {
        w.set(ix(i, 0), c * p.get(ix(i, 1)));
        w.set(ix(i, ny), c * (p.get(ix(i, ny - 1)) + h * lid_speed));
    }
    for j in 1..ny {
        w.set(ix(0, j), c * p.get(ix(1, j)));
        w.set(ix(nx, j), c * p.get(ix(nx - 1, j)));
    }
    for (i, j) in [(0, 0), (nx, 0), (0, ny), (nx, ny)] {
        w.set(ix(i, j), T::zero());
    }
}

fn apply_walls<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    walls: WallVorticity<T>,
    psi: &StaggeredField<T, D>,
    omega: &mut StaggeredField<T, D>,
) {
    match walls {
        WallVorticity::FreeSlip => omega.zero_boundary(),
        WallVorticity::Thom { lid_speed } => thom_wall_vorticity(desc, psi, lid_speed, omega),
    }
}

pub struct SimState<T, const D: usize> {
    pub config: SimConfig<T, D>,
    pub particles: Vec<VortexParticle<T, D>>,
    pub omega: StaggeredField<T, D>,
    pub psi: StaggeredField<T, D>,
    pub u: StaggeredField<T, D>,
    pub phi: StaggeredArray<T, D>,
    pub masks: SolidMasks<T, D>,
    /// Normal velocity imposed on closed faces (see [`imposed_velocity`]).
    pub u_solid: StaggeredField<T, D>,
    pub clock: SegmentClock,
    pub time: T,
    /// Step size of the last completed step.
    pub dt: T,
    /// Force and viscous increments of the last step.
    pub d_gamma_f: StaggeredField<T, D>,
    pub d_gamma_nu: StaggeredField<T, D>,
    pub phase_log: Vec<Phase>,
    /// One record per frame, starting with the initial state.
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub last_report: StepReport,
    pub reference_energy: f64,
    force_curl: StaggeredField<T, D>,
    vp: VectorPotentialSolver<T, D>,
    harmonic: HarmonicSolver<T, D>,
    workspace: TransferWorkspace<T>,
}

impl<T: Real, const D: usize> SimState<T, D> {
    /// Builds the initial state from a grid vorticity: voxelizes the scene,
    /// reconstructs the velocity, seeds particles and samples their vorticity.
    pub fn new(config: SimConfig<T, D>, omega0: StaggeredField<T, D>) -> Result<Self, DynamicsError> {
        config.validate().map_err(DynamicsError::Config)?;
        let desc = config.grid;
        if omega0.layout != Layout::Vorticity {
            return Err(DynamicsError::Config("initial vorticity must use the vorticity layout".into()));
        }
        omega0
            .check(&desc)
            .map_err(|e| DynamicsError::Config(format!("initial vorticity: {e}")))?;
        let clock = SegmentClock::new(config.n_long, config.n_short)
            .ok_or_else(|| DynamicsError::Config("invalid segment lengths".into()))?;
        let masks = if config.scene.is_empty() {
            SolidMasks::empty(&desc)
        } else {
            voxelize(&config.scene, &desc, T::zero(), T::zero())
        };
        let u_solid = imposed_velocity(&desc, &masks, &config.inflow);
        let init_err = |phase, source| DynamicsError::Solver {
            phase,
            source,
            snapshot: Snapshot::default(),
        };
        let mut vp = VectorPotentialSolver::new(&desc, config.psi_closure, config.solver)
            .map_err(|e| init_err(Phase::VectorPotential, e))?;
        let mut harmonic = HarmonicSolver::new(&desc, config.solver);
        let rec = reconstruct(&desc, &mut vp, &mut harmonic, &masks, &u_solid, &omega0).map_err(|(p, e)| init_err(p, e))?;
        let mut omega = omega0;
        apply_walls(&desc, config.walls, &rec.psi, &mut omega);
        let mut particles = reseed_uniform(&desc, config.particles_per_cell, config.jitter_seed)?;
        g2p(&desc, &omega, &mut particles, Segment::Long);
        g2p(&desc, &omega, &mut particles, Segment::Short);
        let alpha = masks.any_solid().then_some(&masks.alpha);
        let e0 = kinetic_energy(&desc, &rec.u, alpha);
        let record = DiagnosticsRecord::measure(0, 0.0, &desc, &rec.u, &omega, alpha, Some(e0), None);
        let zeros = StaggeredField::zeros(&desc, Layout::Vorticity);
        Ok(Self {
            force_curl: force_curl(&desc, &config.force),
            config,
            particles,
            omega,
            psi: rec.psi,
            u: rec.u,
            phi: rec.phi,
            masks,
            u_solid,
            clock,
            time: T::zero(),
            dt: T::zero(),
            d_gamma_f: zeros.clone(),
            d_gamma_nu: zeros,
            phase_log: Vec::new(),
            diagnostics: vec![record],
            last_report: StepReport::default(),
            reference_energy: e0,
            vp,
            harmonic,
            workspace: TransferWorkspace::default(),
        })
    }

    pub fn desc(&self) -> &GridDesc<T, D> {
        &self.config.grid
    }

    /// Steps completed so far.
    pub fn steps_taken(&self) -> usize {
        self.clock.step
    }

    pub fn snapshot(&self, dt: T) -> Snapshot {
        Snapshot {
            step: self.clock.step + 1,
            time: self.time.as_f64(),
            dt: dt.as_f64(),
            max_velocity: self.u.max_abs().as_f64(),
            max_vorticity: self.omega.max_abs().as_f64(),
            kinetic_energy: kinetic_energy(&self.config.grid, &self.u, None),
            num_particles: self.particles.len(),
        }
    }

    /// CFL step `cfl dx / max(|u|, 1e-6 dx)`, limited by `max_dt`, the
    /// explicit-diffusion bound (when enabled) and `cap`.
    pub fn compute_dt(&self, cap: Option<T>) -> T {
        let cfg = &self.config;
        let dx = cfg.grid.dx;
        let mut umax = self.u.max_abs();
        if let WallVorticity::Thom { lid_speed } = cfg.walls {
            umax = umax.max(lid_speed.abs());
        }
        for v in cfg.inflow {
            umax = umax.max(v.abs());
        }
        let mut dt = cfg.cfl * dx / umax.max(T::lit(1e-6) * dx);
        if let Some(m) = cfg.max_dt {
            dt = dt.min(m);
        }
        if cfg.viscous_dt_cap && cfg.nu > T::zero() {
            dt = dt.min(dx * dx / (T::from_count(2 * D) * cfg.nu));
        }
        if let Some(c) = cap {
            dt = dt.min(c);
        }
        dt
    }

    pub fn step(&mut self) -> Result<StepReport, DynamicsError> {
        self.step_capped(None)
    }

    /// One step whose size never exceeds `cap` (used to land on output times).
    pub fn step_capped(&mut self, cap: Option<T>) -> Result<StepReport, DynamicsError> {
        if let Some(c) = cap {
            if !(c > T::zero()) {
                return Err(DynamicsError::Config(format!("step cap must be positive, got {c}")));
            }
        }
        self.phase_log.clear();
        let desc = self.config.grid;
        let hessian = self.config.use_hessian;
        let m = self.clock.step;
        let mut report = StepReport {
            step: m + 1,
            ..StepReport::default()
        };

        if self.clock.long_due() {
            let seed = self.config.jitter_seed.map(|s| s.wrapping_add(m as u64));
            self.particles = reseed_uniform(&desc, self.config.particles_per_cell, seed)?;
            g2p(&desc, &self.omega, &mut self.particles, Segment::Long);
            self.phase_log.push(Phase::LongReinit);
        }
        if self.clock.short_due() {
            g2p(&desc, &self.omega, &mut self.particles, Segment::Short);
            self.particles.par_iter_mut().for_each(|p| p.fold_short());
            self.phase_log.push(Phase::ShortReinit);
        }

        let dt = self.compute_dt(cap);
        report.dt = dt.as_f64();
        report.viscous_limit_exceeded = viscous_limit_exceeded(&desc, self.config.nu, dt);
        self.phase_log.push(Phase::TimeStep);

        let t_new = self.time + dt;
        if self.config.scene.is_dynamic() {
            self.masks = voxelize(&self.config.scene, &desc, t_new, dt);
            self.u_solid = imposed_velocity(&desc, &self.masks, &self.config.inflow);
        }
        self.phase_log.push(Phase::Voxelize);

        let u_mid = midpoint_velocity(
            &desc,
            &mut self.vp,
            &mut self.harmonic,
            &self.masks,
            &self.u_solid,
            &self.u,
            &self.omega,
            dt,
        )
        .map_err(|source| DynamicsError::Solver {
            phase: Phase::Midpoint,
            source,
            snapshot: self.snapshot(dt),
        })?;
        self.phase_log.push(Phase::Midpoint);

        report.reinitialized_particles = self.march(&u_mid, dt, hessian)?;
        self.phase_log.push(Phase::March);

        let stats = self.advect_and_p2g();
        report.uncovered_fraction = stats;
        self.phase_log.push(Phase::AdvectP2g);

        self.apply_forces_and_diffusion(dt);
        self.phase_log.push(Phase::ForcesDiffusion);

        let rec = reconstruct(
            &desc,
            &mut self.vp,
            &mut self.harmonic,
            &self.masks,
            &self.u_solid,
            &self.omega,
        )
        .map_err(|(phase, source)| DynamicsError::Solver {
            phase,
            source,
            snapshot: self.snapshot(dt),
        })?;
        self.phase_log.push(Phase::VectorPotential);
        self.phase_log.push(Phase::Harmonic);
        report.psi_iterations = rec.psi_stats.iter().map(|s| s.iterations).max().unwrap_or(0);
        report.harmonic_iterations = rec.harmonic_stats.iterations;
        report.max_residual = rec
            .psi_stats
            .iter()
            .map(|s| s.final_relative_residual)
            .fold(rec.harmonic_stats.final_relative_residual, f64::max);
        self.psi = rec.psi;
        self.u = rec.u;
        self.phi = rec.phi;

        report.lambda = self.accumulate_path_integral(dt).as_f64();
        self.phase_log.push(Phase::PathIntegral);

        self.time = t_new;
        self.dt = dt;
        self.clock.advance();
        report.time = self.time.as_f64();
        let alpha = self.masks.any_solid().then_some(&self.masks.alpha);
        let record = DiagnosticsRecord::measure(
            self.clock.step,
            report.time,
            &desc,
            &self.u,
            &self.omega,
            alpha,
            Some(self.reference_energy),
            self.diagnostics.last(),
        );
        self.diagnostics.push(record);
        self.last_report = report;
        Ok(report)
    }

    /// RK4 march of every particle; returns the number of particles whose maps
    /// were restarted under [`InstabilityPolicy::Reinitialize`].
    fn march(&mut self, u_mid: &StaggeredField<T, D>, dt: T, hessian: bool) -> Result<usize, DynamicsError> {
        let desc = self.config.grid;
        let failures: Vec<(usize, Instability)> = self
            .particles
            .par_iter_mut()
            .enumerate()
            .filter_map(|(i, p)| rk4_march(p, &desc, u_mid, dt, hessian).err().map(|e| (i, e)))
            .collect();
        if failures.is_empty() {
            return Ok(0);
        }
        match self.config.on_instability {
            InstabilityPolicy::Abort => Err(DynamicsError::Instability {
                kind: failures[0].1,
                count: failures.len(),
                snapshot: self.snapshot(dt),
            }),
            InstabilityPolicy::Reinitialize => {
                log::warn!("restarting the maps of {} unstable particles", failures.len());
                for &(i, _) in &failures {
                    let p = &mut self.particles[i];
                    let (w, g) = sample_vorticity(&desc, &self.omega, &p.pos);
                    p.omega_a = w;
                    p.omega_b = w;
                    p.grad_omega_b = g;
                    p.reset_long();
                    let _ = rk4_march(p, &desc, u_mid, dt, hessian);
                }
                Ok(failures.len())
            }
        }
    }

    /// Connects the maps, pushes vorticity and its gradient forward and
    /// splats them to the grid. Returns the uncovered-sample fraction.
    pub fn advect_and_p2g(&mut self) -> f64 {
        let hessian = self.config.use_hessian;
        let samples: Vec<ParticleSample<T, D>> = self
            .particles
            .par_iter()
            .map(|p| {
                let (f_ac, _) = connect_jacobians(p);
                ParticleSample {
                    pos: p.pos,
                    omega: push_forward_vorticity(p, &f_ac),
                    grad: push_forward_gradient(p, hessian),
                }
            })
            .collect();
        let (field, stats) = p2g(&self.config.grid, &samples, &mut self.workspace);
        self.omega = field;
        stats.uncovered_fraction()
    }

    fn enforce_wall_vorticity(&mut self) {
        apply_walls(&self.config.grid, self.config.walls, &self.psi, &mut self.omega);
    }

    fn apply_forces_and_diffusion(&mut self, dt: T) {
        let desc = self.config.grid;
        self.enforce_wall_vorticity();
        // without the dt cap, diffusion is subcycled inside its stability limit
        let nu = self.config.nu;
        let limit = T::lit(0.5 / D as f64) * desc.dx * desc.dx;
        let subs = if nu > T::zero() { (nu * dt / limit).as_f64().ceil().max(1.0) as usize } else { 1 };
        let h = dt / T::from_count(subs);
        self.d_gamma_nu = StaggeredField::zeros(&desc, Layout::Vorticity);
        for s in 0..subs {
            if s > 0 {
                self.enforce_wall_vorticity();
            }
            let inc = viscosity_increment(&desc, &self.omega, nu, h);
            self.omega.axpy(T::one(), &inc);
            self.d_gamma_nu.axpy(T::one(), &inc);
        }
        self.d_gamma_f = self.force_curl.clone();
        self.d_gamma_f.scale(dt);
        self.omega.axpy(T::one(), &self.d_gamma_f);
    }

    /// Refreshes the grid vorticity from the final velocity and adds the
    /// back-mapped increment `T_ac (dt omega_pen + dGamma_f + dGamma_nu)` to
    /// every particle's initial vorticity. Returns the penalization rate used.
    pub fn accumulate_path_integral(&mut self, dt: T) -> T {
        let desc = self.config.grid;
        self.omega = curl_face_to_vort(&desc, &self.u);
        self.enforce_wall_vorticity();

        let mut delta = self.d_gamma_f.clone();
        delta.axpy(T::one(), &self.d_gamma_nu);
        let lambda = self.config.lambda.rate(dt);
        if self.masks.any_solid() && lambda > T::zero() {
            let u_pen = penalization_velocity(&desc, &self.u, &self.masks);
            let w_pen = penalization_vorticity(&desc, &u_pen, lambda);
            delta.axpy(dt, &w_pen);
        }
        if delta.max_abs() == T::zero() {
            return lambda;
        }
        self.particles.par_iter_mut().for_each(|p| {
            let (d, _) = sample_vorticity(&desc, &delta, &p.pos);
            if D == 2 {
                p.omega_a[0] += d[0];
            } else {
                let (_, t_ac) = connect_jacobians(p);
                for i in 0..D {
                    p.omega_a[i] += (0..D).map(|k| t_ac[i][k] * d[k]).sum::<T>();
                }
            }
        });
        lambda
    }

    /// Runs until `max_steps` or `max_time` from the configuration is reached
    /// (at least one must be set), landing exactly on `max_time`.
    pub fn run(&mut self) -> Result<(), DynamicsError> {
        self.run_observed(|_, _| true)
    }

    /// Like [`run`](Self::run), calling `on_step` after every step; the run
    /// also stops early when `on_step` returns `false`.
    pub fn run_observed(&mut self, mut on_step: impl FnMut(&Self, &StepReport) -> bool) -> Result<(), DynamicsError> {
        let (ms, mt) = (self.config.max_steps, self.config.max_time);
        if ms.is_none() && mt.is_none() {
            return Err(DynamicsError::Config("run needs max_steps or max_time".into()));
        }
        loop {
            if ms.is_some_and(|n| self.clock.step >= n) {
                return Ok(());
            }
            let cap = match mt {
                Some(t) => {
                    let left = t - self.time;
                    if left <= t * T::lit(1e-12) {
                        return Ok(());
                    }
                    Some(left)
                }
                None => None,
            };
            let report = self.step_capped(cap)?;
            if !on_step(self, &report) {
                return Ok(());
            }
        }
    }
}
