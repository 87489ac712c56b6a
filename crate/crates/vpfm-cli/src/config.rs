//! Run configuration: a TOML file whose omitted keys are filled from the
//! defaults of the chosen scene. The resolved configuration serializes back
//! to a file that parses to itself.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneName {
    Leapfrog2d,
    Leapfrog3d,
    TaylorGreen,
    Cavity,
    Trefoil,
    HopfLink,
    Headon,
    DiskFlow,
    PlateFlow,
    SphereFlow,
    CylinderFlow,
}

impl SceneName {
    pub const ALL: [SceneName; 11] = [
        SceneName::Leapfrog2d,
        SceneName::Leapfrog3d,
        SceneName::TaylorGreen,
        SceneName::Cavity,
        SceneName::Trefoil,
        SceneName::HopfLink,
        SceneName::Headon,
        SceneName::DiskFlow,
        SceneName::PlateFlow,
        SceneName::SphereFlow,
        SceneName::CylinderFlow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SceneName::Leapfrog2d => "leapfrog2d",
            SceneName::Leapfrog3d => "leapfrog3d",
            SceneName::TaylorGreen => "taylor_green",
            SceneName::Cavity => "cavity",
            SceneName::Trefoil => "trefoil",
            SceneName::HopfLink => "hopf_link",
            SceneName::Headon => "headon",
            SceneName::DiskFlow => "disk_flow",
            SceneName::PlateFlow => "plate_flow",
            SceneName::SphereFlow => "sphere_flow",
            SceneName::CylinderFlow => "cylinder_flow",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s)
    }

    /// Dimensions the scene can run in.
    pub fn dims(self) -> &'static [usize] {
        match self {
            SceneName::Leapfrog2d | SceneName::TaylorGreen | SceneName::Cavity => &[2],
            SceneName::Leapfrog3d | SceneName::Trefoil | SceneName::HopfLink | SceneName::Headon => &[3],
            _ => &[2, 3],
        }
    }
}

impl fmt::Display for SceneName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    Zero,
    DivergenceFree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnInstability {
    Reinitialize,
    Abort,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Cells per axis; two entries for planar runs, three for spatial ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    /// Extent along x; the spacing is `length / cells[0]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_long: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_short: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles_per_cell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub use_hessian: Option<bool>,
    /// Penalization rate `factor / dt`; ignored when `lambda` is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_factor: Option<f64>,
    /// Fixed penalization rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi_closure: Option<Closure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub viscous_dt_cap: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub on_instability: Option<OnInstability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_dt: Option<f64>,
    /// Particle jitter seed; unset places particles on a regular lattice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    /// Kinematic viscosity. With `re` also given it must equal
    /// `reference_velocity * reference_length / re`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_velocity: Option<f64>,
    /// Far-field velocity imposed through the walls.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inflow: Option<Vec<f64>>,
    /// Tangential speed of the top wall (planar cavity only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lid_speed: Option<f64>,
    /// Uniform body force.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smooth_sweeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse_sweeps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Frames between grid dumps; 0 writes only the final state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub every: Option<usize>,
    /// Stop once `|dE/dt| < steady_tol * E` (0 disables the check).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_tol: Option<f64>,
}

/// Planar Gaussian vortex `omega = circulation / (pi r^2) exp(-|x - c|^2 / r^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexSpec {
    pub center: [f64; 2],
    pub circulation: f64,
    pub radius: f64,
}

/// Circular vortex filament; the circulation follows the right-hand rule
/// about `normal`, so a positive ring travels along `normal`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    pub center: [f64; 3],
    pub normal: [f64; 3],
    pub radius: f64,
    pub circulation: f64,
    /// Mollification radius of the filament.
    pub support: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
}

/// Trefoil filament `center + scale (sin t + 2 sin 2t, cos t - 2 cos 2t, -sin 3t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotSpec {
    pub center: [f64; 3],
    pub scale: f64,
    pub circulation: f64,
    pub support: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolidKind {
    Sphere,
    Box,
    Cylinder,
    Plate,
}

/// Rigid solid. Cylinders run along their local z axis; plates are thin along
/// local x. The local frame is rotated by `angle` about `axis`, and the solid
/// translates with `velocity` until `move_until`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidSpec {
    pub kind: SolidKind,
    pub center: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_extents: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub move_until: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneName,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vortex: Option<Vec<VortexSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring: Option<Vec<RingSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knot: Option<Vec<KnotSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solid: Option<Vec<SolidSpec>>,
}

impl RunConfig {
    /// A configuration naming only the scene.
    pub fn for_scene(scene: SceneName) -> Self {
        Self {
            scene,
            grid: GridSection::default(),
            sim: SimSection::default(),
            flow: FlowSection::default(),
            solver: SolverSection::default(),
            output: OutputSection::default(),
            vortex: None,
            ring: None,
            knot: None,
            solid: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// Fills every omitted key from the scene defaults and checks the result.
    pub fn resolve(self) -> Result<Self, ConfigError> {
        let d = crate::scenes::defaults(self.scene);
        let g = self.grid;
        let s = self.sim;
        let f = self.flow;
        let v = self.solver;
        let o = self.output;
        let mut r = RunConfig {
            scene: self.scene,
            grid: GridSection {
                cells: g.cells.or(d.grid.cells),
                length: g.length.or(d.grid.length),
                origin: g.origin.clone().or(d.grid.origin),
            },
            sim: SimSection {
                n_long: s.n_long.or(d.sim.n_long),
                n_short: s.n_short.or(d.sim.n_short),
                cfl: s.cfl.or(d.sim.cfl),
                particles_per_cell: s.particles_per_cell.or(d.sim.particles_per_cell),
                use_hessian: s.use_hessian.or(d.sim.use_hessian),
                lambda_factor: s.lambda_factor.or(d.sim.lambda_factor),
                lambda: s.lambda.or(d.sim.lambda),
                psi_closure: s.psi_closure.or(d.sim.psi_closure),
                viscous_dt_cap: s.viscous_dt_cap.or(d.sim.viscous_dt_cap),
                on_instability: s.on_instability.or(d.sim.on_instability),
                max_steps: s.max_steps.or(d.sim.max_steps),
                max_time: s.max_time.or(d.sim.max_time),
                max_dt: s.max_dt.or(d.sim.max_dt),
                seed: s.seed.or(d.sim.seed),
            },
            flow: FlowSection {
                nu: f.nu,
                re: f.re,
                reference_length: f.reference_length.or(d.flow.reference_length),
                reference_velocity: f.reference_velocity.or(d.flow.reference_velocity),
                inflow: f.inflow.clone().or(d.flow.inflow),
                lid_speed: f.lid_speed.or(d.flow.lid_speed),
                force: f.force.clone().or(d.flow.force),
            },
            solver: SolverSection {
                tol: v.tol.or(d.solver.tol),
                max_iters: v.max_iters.or(d.solver.max_iters),
                smooth_sweeps: v.smooth_sweeps.or(d.solver.smooth_sweeps),
                coarse_sweeps: v.coarse_sweeps.or(d.solver.coarse_sweeps),
            },
            output: OutputSection {
                every: o.every.or(d.output.every),
                steady_tol: o.steady_tol.or(d.output.steady_tol),
            },
            vortex: self.vortex.or(d.vortex),
            ring: self.ring.or(d.ring),
            knot: self.knot.or(d.knot),
            solid: self.solid.or(d.solid),
        };
        // scene defaults are written for the scene's widest grid
        let dim = r.dim();
        let fit = |user: &Option<Vec<f64>>, v: &mut Option<Vec<f64>>| {
            if user.is_none() {
                if let Some(v) = v.as_mut() {
                    v.truncate(dim);
                }
            }
        };
        fit(&g.origin, &mut r.grid.origin);
        fit(&f.inflow, &mut r.flow.inflow);
        fit(&f.force, &mut r.flow.force);
        // viscosity: explicit nu wins only when no Reynolds number is given
        if r.flow.nu.is_none() && r.flow.re.is_none() {
            r.flow.nu = d.flow.nu;
            r.flow.re = d.flow.re;
        }
        if let Some(re) = r.flow.re {
            if !(re > 0.0) {
                return Err(invalid(format!("flow.re must be positive, got {re}")));
            }
            let (u, l) = (r.flow.reference_velocity.unwrap_or(1.0), r.flow.reference_length.unwrap_or(1.0));
            let nu = u * l / re;
            match r.flow.nu {
                Some(given) if (given - nu).abs() > 1e-9 * nu.abs().max(1e-300) => {
                    return Err(invalid(format!(
                        "flow.nu = {given} contradicts flow.re = {re} (which implies nu = {nu})"
                    )))
                }
                _ => r.flow.nu = Some(nu),
            }
        }
        r.validate()?;
        Ok(r)
    }

    /// Spatial dimension given by the number of grid cells entries.
    pub fn dim(&self) -> usize {
        self.grid.cells.as_ref().map_or(0, Vec::len)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let cells = self.grid.cells.as_ref().ok_or_else(|| invalid("grid.cells missing"))?;
        let dim = cells.len();
        if !self.scene.dims().contains(&dim) {
            return Err(invalid(format!(
                "scene {} runs in {:?} dimensions, grid.cells has {dim} entries",
                self.scene,
                self.scene.dims()
            )));
        }
        if cells.iter().any(|&n| n < 4) {
            return Err(invalid("grid.cells: every axis needs at least 4 cells"));
        }
        let length = self.grid.length.unwrap_or(0.0);
        if !(length > 0.0) || !length.is_finite() {
            return Err(invalid(format!("grid.length must be positive, got {length}")));
        }
        check_len("grid.origin", self.grid.origin.as_deref(), dim)?;
        check_len("flow.inflow", self.flow.inflow.as_deref(), dim)?;
        check_len("flow.force", self.flow.force.as_deref(), dim)?;
        if self.flow.lid_speed.is_some_and(|v| v != 0.0) && self.scene != SceneName::Cavity {
            return Err(invalid("flow.lid_speed only applies to the cavity scene"));
        }
        let nu = self.flow.nu.unwrap_or(0.0);
        if !(nu >= 0.0) {
            return Err(invalid(format!("flow.nu must be non-negative, got {nu}")));
        }
        if self.sim.max_steps.is_none() && self.sim.max_time.is_none() {
            return Err(invalid("set sim.max_steps or sim.max_time"));
        }
        if dim == 3 && self.vortex.as_ref().is_some_and(|v| !v.is_empty()) {
            return Err(invalid("[[vortex]] entries are planar; use [[ring]] or [[knot]] in 3D"));
        }
        if dim == 2
            && (self.ring.as_ref().is_some_and(|v| !v.is_empty()) || self.knot.as_ref().is_some_and(|v| !v.is_empty()))
        {
            return Err(invalid("[[ring]] and [[knot]] entries need a 3D grid"));
        }
        Ok(())
    }
}

fn check_len(name: &str, v: Option<&[f64]>, dim: usize) -> Result<(), ConfigError> {
    match v {
        Some(v) if v.len() != dim => Err(invalid(format!("{name} needs {dim} entries, got {}", v.len()))),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_names_round_trip() {
        for s in SceneName::ALL {
            assert_eq!(SceneName::parse(s.as_str()), Some(s));
            let cfg = RunConfig::parse(&format!("scene = \"{s}\"")).unwrap();
            assert_eq!(cfg.scene, s);
        }
        assert_eq!(SceneName::parse("vortex_street"), None);
        assert!(matches!(RunConfig::parse("scene = \"vortex_street\""), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("scene = \"cavity\"\n[sim]\nnlong = 3\n").is_err());
        assert!(RunConfig::parse("scene = \"cavity\"\n[extra]\n").is_err());
    }

    #[test]
    fn every_scene_resolves_and_round_trips() {
        for s in SceneName::ALL {
            let r = RunConfig::for_scene(s).resolve().unwrap_or_else(|e| panic!("{s}: {e}"));
            assert!(s.dims().contains(&r.dim()));
            let back = RunConfig::parse(&r.to_toml()).unwrap().resolve().unwrap();
            assert_eq!(back, r, "{s}");
        }
    }

    #[test]
    fn user_values_override_defaults() {
        let r = RunConfig::parse("scene = \"taylor_green\"\n[grid]\ncells = [16, 16]\n[sim]\nn_long = 7\n")
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(r.grid.cells, Some(vec![16, 16]));
        assert_eq!(r.sim.n_long, Some(7));
        assert_eq!(r.sim.n_short, Some(1));
    }

    #[test]
    fn reynolds_number_sets_viscosity() {
        let r = RunConfig::parse("scene = \"cavity\"\n[flow]\nre = 400\n").unwrap().resolve().unwrap();
        assert!((r.flow.nu.unwrap() - 1.0 / 400.0).abs() < 1e-15);
        let bad = RunConfig::parse("scene = \"cavity\"\n[flow]\nre = 400\nnu = 0.1\n").unwrap();
        assert!(matches!(bad.resolve(), Err(ConfigError::Invalid(_))));
        let nu_only = RunConfig::parse("scene = \"cavity\"\n[flow]\nnu = 0.02\nre = 50\n").unwrap();
        assert!(nu_only.resolve().is_ok());
        assert!(RunConfig::parse("scene = \"cavity\"\n[flow]\nre = -1\n").unwrap().resolve().is_err());
    }

    #[test]
    fn invalid_settings_are_reported() {
        let cases = [
            "scene = \"cavity\"\n[grid]\ncells = [16, 16, 16]\n",
            "scene = \"leapfrog3d\"\n[grid]\ncells = [16, 16]\n",
            "scene = \"cavity\"\n[grid]\ncells = [2, 16]\n",
            "scene = \"cavity\"\n[grid]\nlength = 0.0\n",
            "scene = \"cavity\"\n[grid]\norigin = [0.0, 0.0, 0.0]\n",
            "scene = \"sphere_flow\"\n[flow]\nlid_speed = 1.0\n",
            "scene = \"taylor_green\"\n[flow]\nnu = -0.1\n",
            "scene = \"trefoil\"\n[[vortex]]\ncenter = [0.5, 0.5]\ncirculation = 1.0\nradius = 0.1\n",
        ];
        for c in cases {
            let r = RunConfig::parse(c).unwrap().resolve();
            assert!(matches!(r, Err(ConfigError::Invalid(_))), "{c}");
        }
    }

    #[test]
    fn planar_grid_trims_scene_vectors() {
        let r = RunConfig::parse("scene = \"sphere_flow\"\n[grid]\ncells = [32, 16]\n").unwrap().resolve().unwrap();
        assert_eq!(r.dim(), 2);
        assert_eq!(r.flow.inflow.as_ref().map(Vec::len), Some(2));
        assert!(r.grid.origin.as_ref().is_none_or(|o| o.len() == 2));
    }
}
