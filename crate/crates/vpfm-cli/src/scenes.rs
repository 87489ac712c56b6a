//! Bundled scenes: default parameters and construction of the initial state.

use crate::config::{
    Closure, ConfigError, FlowSection, GridSection, KnotSpec, OnInstability, OutputSection, RingSpec, RunConfig,
    SceneName, SimSection, SolidKind, SolidSpec, SolverSection, VortexSpec,
};
use crate::filament::{default_segments, mollify, Filament};
use std::f64::consts::PI;
use vpfm::diagnostics::taylor_green_omega;
use vpfm::dynamics::{Force, InstabilityPolicy, LambdaPolicy, SimConfig, SimState, WallVorticity};
use vpfm::elliptic::{PsiClosure, SolverParams};
use vpfm::grid::{GridDesc, Layout, StaggeredField};
use vpfm::solids::{Pose, PoseTrack, ShapeKind, SolidScene, SolidShape};

fn ring(center: [f64; 3], normal: [f64; 3], radius: f64, circulation: f64, support: f64) -> RingSpec {
    RingSpec {
        center,
        normal,
        radius,
        circulation,
        support,
        segments: None,
    }
}

fn solid(kind: SolidKind, center: [f64; 3]) -> SolidSpec {
    SolidSpec {
        kind,
        center,
        radius: None,
        half_length: None,
        half_extents: None,
        axis: None,
        angle: None,
        velocity: None,
        move_until: None,
    }
}

/// Default configuration of every scene. Omitted keys of a user file are
/// taken from here.
pub fn defaults(scene: SceneName) -> RunConfig {
    let mut c = RunConfig::for_scene(scene);
    let three = matches!(
        scene,
        SceneName::Leapfrog3d
            | SceneName::Trefoil
            | SceneName::HopfLink
            | SceneName::Headon
            | SceneName::DiskFlow
            | SceneName::PlateFlow
            | SceneName::SphereFlow
            | SceneName::CylinderFlow
    );
    c.sim = SimSection {
        n_long: Some(20),
        n_short: Some(1),
        cfl: Some(if three { 0.5 } else { 1.0 }),
        particles_per_cell: Some(if three { 8 } else { 4 }),
        use_hessian: Some(true),
        lambda_factor: Some(1.0),
        lambda: None,
        psi_closure: Some(Closure::Zero),
        viscous_dt_cap: Some(true),
        on_instability: Some(OnInstability::Reinitialize),
        max_steps: None,
        max_time: None,
        max_dt: None,
        seed: Some(1),
    };
    c.flow = FlowSection {
        nu: Some(0.0),
        re: None,
        reference_length: Some(1.0),
        reference_velocity: Some(1.0),
        inflow: None,
        lid_speed: None,
        force: None,
    };
    let p = SolverParams::default();
    c.solver = SolverSection {
        tol: Some(p.tol),
        max_iters: Some(p.max_iters),
        smooth_sweeps: Some(p.smooth_sweeps),
        coarse_sweeps: Some(p.coarse_sweeps),
    };
    c.output = OutputSection {
        every: Some(0),
        steady_tol: Some(0.0),
    };
    let grid = |cells: &[usize], length: f64| GridSection {
        cells: Some(cells.to_vec()),
        length: Some(length),
        origin: Some(vec![0.0; cells.len()]),
    };
    let inflow3 = Some(vec![0.1, 0.0, 0.0]);
    match scene {
        SceneName::TaylorGreen => {
            c.grid = grid(&[64, 64], 2.0 * PI);
            c.flow.nu = Some(0.005);
            c.sim.cfl = Some(0.4);
            c.sim.max_time = Some(1.0);
            c.solver.tol = Some(1e-10);
        }
        SceneName::Cavity => {
            c.grid = grid(&[64, 64], 1.0);
            c.flow.nu = None;
            c.flow.re = Some(100.0);
            c.flow.lid_speed = Some(1.0);
            c.sim.viscous_dt_cap = Some(false);
            c.sim.max_time = Some(60.0);
            c.output.steady_tol = Some(1e-7);
        }
        SceneName::Leapfrog2d => {
            c.grid = grid(&[256, 256], 1.0);
            c.sim.n_long = Some(240);
            c.sim.max_time = Some(50.0);
            let (g, r) = (0.01, 0.02);
            c.vortex = Some(
                [0.1, 0.23125]
                    .iter()
                    .flat_map(|&x| {
                        [
                            VortexSpec {
                                center: [x, 0.6],
                                circulation: g,
                                radius: r,
                            },
                            VortexSpec {
                                center: [x, 0.4],
                                circulation: -g,
                                radius: r,
                            },
                        ]
                    })
                    .collect(),
            );
        }
        SceneName::Leapfrog3d => {
            c.grid = grid(&[128, 64, 64], 1.0);
            c.sim.max_time = Some(20.0);
            c.ring = Some(
                [0.1, 0.23125]
                    .iter()
                    .map(|&x| ring([x, 0.25, 0.25], [1.0, 0.0, 0.0], 0.12, 0.02, 0.04))
                    .collect(),
            );
        }
        SceneName::Trefoil => {
            c.grid = grid(&[64, 64, 64], 1.0);
            c.sim.n_long = Some(40);
            c.sim.max_time = Some(10.0);
            c.knot = Some(vec![KnotSpec {
                center: [0.5; 3],
                scale: 0.08,
                circulation: 0.02,
                support: 0.04,
                segments: None,
            }]);
        }
        SceneName::HopfLink => {
            c.grid = grid(&[64, 64, 64], 1.0);
            c.sim.n_long = Some(30);
            c.sim.max_time = Some(10.0);
            let (r, a, g) = (0.18, 0.0168, 0.02);
            c.ring = Some(vec![
                ring([0.5 - r / 2.0, 0.5, 0.5], [0.0, 0.0, 1.0], r, g, a),
                ring([0.5 + r / 2.0, 0.5, 0.5], [0.0, 1.0, 0.0], r, -g, a),
            ]);
        }
        SceneName::Headon => {
            c.grid = grid(&[64, 64, 64], 0.5);
            c.sim.max_time = Some(10.0);
            let (r, a, g) = (0.06, 0.016, 0.02);
            c.ring = Some(vec![
                ring([0.175, 0.25, 0.25], [1.0, 0.0, 0.0], r, g, a),
                ring([0.325, 0.25, 0.25], [1.0, 0.0, 0.0], r, -g, a),
            ]);
        }
        SceneName::DiskFlow => {
            c.grid = grid(&[96, 48, 48], 2.0);
            c.flow.nu = None;
            c.flow.re = Some(9500.0);
            c.flow.reference_length = Some(0.5);
            c.flow.reference_velocity = Some(0.1);
            c.flow.inflow = inflow3;
            c.sim.max_time = Some(30.0);
            let mut s = solid(SolidKind::Cylinder, [0.5, 0.5, 0.5]);
            s.radius = Some(0.25);
            s.half_length = Some(0.01);
            s.axis = Some([0.0, 1.0, 0.0]);
            s.angle = Some(PI / 2.0);
            c.solid = Some(vec![s]);
        }
        SceneName::PlateFlow => {
            c.grid = grid(&[96, 48, 48], 2.0);
            c.flow.nu = None;
            c.flow.re = Some(1000.0);
            c.flow.reference_length = Some(0.4);
            c.flow.reference_velocity = Some(0.1);
            c.flow.inflow = inflow3;
            c.sim.max_time = Some(30.0);
            let mut s = solid(SolidKind::Plate, [0.5, 0.5, 0.5]);
            s.half_extents = Some([0.01, 0.2, 0.2]);
            c.solid = Some(vec![s]);
        }
        SceneName::SphereFlow => {
            c.grid = grid(&[64, 32, 32], 2.0);
            c.flow.nu = None;
            c.flow.re = Some(500.0);
            c.flow.reference_length = Some(0.3);
            c.flow.reference_velocity = Some(0.1);
            c.flow.inflow = inflow3;
            c.sim.max_steps = Some(200);
            let mut s = solid(SolidKind::Sphere, [0.5, 0.5, 0.5]);
            s.radius = Some(0.15);
            c.solid = Some(vec![s]);
        }
        SceneName::CylinderFlow => {
            c.grid = grid(&[64, 32, 32], 2.0);
            c.flow.nu = None;
            c.flow.re = Some(200.0);
            c.flow.reference_length = Some(0.2);
            c.flow.reference_velocity = Some(0.1);
            c.flow.inflow = inflow3;
            c.sim.max_time = Some(30.0);
            let mut s = solid(SolidKind::Cylinder, [0.5, 0.5, 0.5]);
            s.radius = Some(0.1);
            s.half_length = Some(1.0);
            c.solid = Some(vec![s]);
        }
    }
    c
}

fn shape_of(s: &SolidSpec) -> Result<ShapeKind<f64>, ConfigError> {
    let need = |v: Option<f64>, what: &str| {
        v.filter(|x| *x > 0.0)
            .ok_or_else(|| ConfigError::Invalid(format!("{:?} solid needs a positive {what}", s.kind)))
    };
    Ok(match s.kind {
        SolidKind::Sphere => ShapeKind::Sphere {
            radius: need(s.radius, "radius")?,
        },
        SolidKind::Cylinder => ShapeKind::Cylinder {
            radius: need(s.radius, "radius")?,
            half_length: need(s.half_length, "half_length")?,
        },
        SolidKind::Box | SolidKind::Plate => {
            let h = s
                .half_extents
                .filter(|h| h.iter().all(|v| *v > 0.0))
                .ok_or_else(|| ConfigError::Invalid(format!("{:?} solid needs positive half_extents", s.kind)))?;
            if s.kind == SolidKind::Box {
                ShapeKind::Box { half_extents: h }
            } else {
                ShapeKind::Plate { half_extents: h }
            }
        }
    })
}

pub fn solid_scene(specs: &[SolidSpec]) -> Result<SolidScene<f64>, ConfigError> {
    let mut scene = SolidScene::default();
    for s in specs {
        let kind = shape_of(s)?;
        let pose0 = Pose::from_axis_angle(s.center, s.axis.unwrap_or([0.0, 0.0, 1.0]), s.angle.unwrap_or(0.0));
        let track = match (s.velocity, s.move_until) {
            (Some(v), Some(t1)) if t1 > 0.0 && v.iter().any(|x| *x != 0.0) => {
                let mut end = pose0;
                end.translation = std::array::from_fn(|a| s.center[a] + v[a] * t1);
                PoseTrack {
                    keys: vec![(0.0, pose0), (t1, end)],
                }
            }
            (Some(v), None) if v.iter().any(|x| *x != 0.0) => {
                return Err(ConfigError::Invalid("a moving solid needs move_until".into()))
            }
            _ => PoseTrack::fixed(pose0),
        };
        scene.shapes.push(SolidShape { kind, track });
    }
    Ok(scene)
}

fn grid_desc<const D: usize>(cfg: &RunConfig) -> Result<GridDesc<f64, D>, ConfigError> {
    let cells = cfg.grid.cells.as_ref().expect("resolved");
    let length = cfg.grid.length.expect("resolved");
    let cells: [usize; D] = cells
        .as_slice()
        .try_into()
        .map_err(|_| ConfigError::Invalid(format!("grid.cells needs {D} entries")))?;
    let origin = cfg.grid.origin.clone().unwrap_or_else(|| vec![0.0; D]);
    let origin: [f64; D] = std::array::from_fn(|a| origin[a]);
    GridDesc::new(cells, length / cells[0] as f64, origin).map_err(|e| ConfigError::Invalid(e.to_string()))
}

/// Solver configuration of a resolved run configuration.
pub fn sim_config<const D: usize>(cfg: &RunConfig) -> Result<SimConfig<f64, D>, ConfigError> {
    let desc = grid_desc::<D>(cfg)?;
    let s = &cfg.sim;
    let mut sc = SimConfig::new(desc);
    sc.n_long = s.n_long.unwrap_or(sc.n_long);
    sc.n_short = s.n_short.unwrap_or(sc.n_short);
    sc.cfl = s.cfl.unwrap_or(sc.cfl);
    sc.particles_per_cell = s.particles_per_cell.unwrap_or(sc.particles_per_cell);
    sc.use_hessian = s.use_hessian.unwrap_or(true);
    sc.lambda = match (s.lambda, s.lambda_factor) {
        (Some(l), _) => LambdaPolicy::Fixed(l),
        (None, f) => LambdaPolicy::InverseDt {
            factor: f.unwrap_or(1.0),
        },
    };
    sc.psi_closure = match s.psi_closure {
        Some(Closure::DivergenceFree) => PsiClosure::DivergenceFree,
        _ => PsiClosure::Zero,
    };
    sc.viscous_dt_cap = s.viscous_dt_cap.unwrap_or(true);
    sc.on_instability = match s.on_instability {
        Some(OnInstability::Abort) => InstabilityPolicy::Abort,
        _ => InstabilityPolicy::Reinitialize,
    };
    sc.max_steps = s.max_steps;
    sc.max_time = s.max_time;
    sc.max_dt = s.max_dt;
    sc.jitter_seed = s.seed;
    sc.nu = cfg.flow.nu.unwrap_or(0.0);
    if let Some(v) = &cfg.flow.inflow {
        sc.inflow = std::array::from_fn(|a| v[a]);
    }
    if let Some(f) = &cfg.flow.force {
        sc.force = Force::Uniform(std::array::from_fn(|a| f[a]));
    }
    if cfg.scene == SceneName::Cavity {
        sc.walls = WallVorticity::Thom {
            lid_speed: cfg.flow.lid_speed.unwrap_or(1.0),
        };
    }
    sc.solver = SolverParams {
        tol: cfg.solver.tol.unwrap_or(sc.solver.tol),
        max_iters: cfg.solver.max_iters.unwrap_or(sc.solver.max_iters),
        smooth_sweeps: cfg.solver.smooth_sweeps.unwrap_or(sc.solver.smooth_sweeps),
        coarse_sweeps: cfg.solver.coarse_sweeps.unwrap_or(sc.solver.coarse_sweeps),
    };
    sc.scene = solid_scene(cfg.solid.as_deref().unwrap_or(&[]))?;
    sc.output_every = cfg.output.every.unwrap_or(0);
    sc.scene_name = cfg.scene.as_str().into();
    sc.validate().map_err(ConfigError::Invalid)?;
    Ok(sc)
}

fn inside<const D: usize>(desc: &GridDesc<f64, D>, lo: &[f64], hi: &[f64]) -> bool {
    let ext = desc.extent();
    (0..D).all(|a| lo[a] >= desc.origin[a] && hi[a] <= desc.origin[a] + ext[a])
}

/// Mollified filaments of the configuration's rings and knots.
pub fn filaments(cfg: &RunConfig) -> Vec<Filament> {
    let mut out = Vec::new();
    for r in cfg.ring.iter().flatten() {
        let n = r.segments.unwrap_or_else(|| default_segments(2.0 * PI * r.radius, r.support));
        out.push(Filament::ring(r.center, r.normal, r.radius, r.circulation, r.support, n));
    }
    for k in cfg.knot.iter().flatten() {
        // the unit trefoil is about 28 long
        let n = k.segments.unwrap_or_else(|| default_segments(28.0 * k.scale, k.support));
        out.push(Filament::trefoil(k.center, k.scale, k.circulation, k.support, n));
    }
    out
}

pub fn initial_vorticity_3d(cfg: &RunConfig, desc: &GridDesc<f64, 3>) -> Result<StaggeredField<f64, 3>, ConfigError> {
    for r in cfg.ring.iter().flatten() {
        if !(r.radius > 0.0 && r.support > 0.0) || r.normal.iter().all(|v| *v == 0.0) {
            return Err(ConfigError::Invalid("ring needs positive radius and support and a nonzero normal".into()));
        }
    }
    for k in cfg.knot.iter().flatten() {
        if !(k.scale > 0.0 && k.support > 0.0) {
            return Err(ConfigError::Invalid("knot needs positive scale and support".into()));
        }
    }
    let fils = filaments(cfg);
    for f in &fils {
        let (lo, hi) = f.bounds();
        if !inside(desc, &lo, &hi) {
            return Err(ConfigError::Invalid(format!(
                "vortex filament (with its support) leaves the domain: [{:.4?}, {:.4?}]",
                lo, hi
            )));
        }
    }
    Ok(mollify(desc, &fils))
}

pub fn initial_vorticity_2d(cfg: &RunConfig, desc: &GridDesc<f64, 2>) -> Result<StaggeredField<f64, 2>, ConfigError> {
    if cfg.scene == SceneName::TaylorGreen {
        return Ok(taylor_green_omega(desc, cfg.flow.nu.unwrap_or(0.0), 0.0));
    }
    let vortices = cfg.vortex.as_deref().unwrap_or(&[]);
    for v in vortices {
        if !(v.radius > 0.0) {
            return Err(ConfigError::Invalid("vortex radius must be positive".into()));
        }
        // Gaussian tail below 1e-6 of the peak
        let reach = 3.72 * v.radius;
        let lo = [v.center[0] - reach, v.center[1] - reach];
        let hi = [v.center[0] + reach, v.center[1] + reach];
        if !inside(desc, &lo, &hi) {
            return Err(ConfigError::Invalid(format!("vortex at {:?} is too close to the walls", v.center)));
        }
    }
    Ok(StaggeredField::from_fn(desc, Layout::Vorticity, |_, x| {
        vortices
            .iter()
            .map(|v| {
                let r2 = (x[0] - v.center[0]).powi(2) + (x[1] - v.center[1]).powi(2);
                v.circulation / (PI * v.radius * v.radius) * (-r2 / (v.radius * v.radius)).exp()
            })
            .sum()
    }))
}

/// A constructed planar or spatial simulation.
pub enum Sim {
    Planar(SimState<f64, 2>),
    Spatial(SimState<f64, 3>),
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] vpfm::dynamics::DynamicsError),
}

/// Builds the initial state of a resolved configuration: initial vorticity,
/// first reconstruction and particle seeding.
pub fn init_scene(cfg: &RunConfig) -> Result<Sim, BuildError> {
    match cfg.dim() {
        2 => {
            let sc = sim_config::<2>(cfg)?;
            let w = initial_vorticity_2d(cfg, &sc.grid)?;
            Ok(Sim::Planar(SimState::new(sc, w)?))
        }
        3 => {
            let sc = sim_config::<3>(cfg)?;
            let w = initial_vorticity_3d(cfg, &sc.grid)?;
            Ok(Sim::Spatial(SimState::new(sc, w)?))
        }
        d => Err(ConfigError::Invalid(format!("unsupported dimension {d}")).into()),
    }
}
