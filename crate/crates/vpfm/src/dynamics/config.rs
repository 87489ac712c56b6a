use crate::elliptic::{PsiClosure, SolverParams};
use crate::grid::GridDesc;
use crate::solids::SolidScene;
use crate::Real;

/// Penalization rate. Whatever the policy, `lambda * dt` is clamped to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaPolicy<T> {
    /// `lambda = factor / dt`.
    InverseDt { factor: T },
    Fixed(T),
}

impl<T: Real> LambdaPolicy<T> {
    pub fn rate(&self, dt: T) -> T {
        let raw = match *self {
            Self::InverseDt { factor } => factor / dt,
            Self::Fixed(l) => l,
        };
        raw.max(T::zero()).min(T::one() / dt)
    }
}

/// External body force `f(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Force<T, const D: usize> {
    None,
    Uniform([T; D]),
    /// `f(x) = offset + gradient x`, `gradient[i][j] = df_i/dx_j`.
    Affine { offset: [T; D], gradient: [[T; D]; D] },
}

impl<T: Real, const D: usize> Force<T, D> {
    pub fn eval(&self, x: &[T; D]) -> [T; D] {
        match self {
            Self::None => [T::zero(); D],
            Self::Uniform(v) => *v,
            Self::Affine { offset, gradient } => {
                std::array::from_fn(|i| offset[i] + (0..D).map(|j| gradient[i][j] * x[j]).sum::<T>())
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }
}

/// Vorticity imposed on the wall samples after every reconstruction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WallVorticity<T> {
    /// Free-slip walls: tangential vorticity vanishes on the wall samples.
    FreeSlip,
    /// Planar no-slip walls through Thom's streamfunction formula; the top
    /// wall slides along +x at `lid_speed`.
    Thom { lid_speed: T },
}

/// What to do when a particle's map goes non-finite or folds over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InstabilityPolicy {
    /// Stop the step with an error.
    Abort,
    /// Restart the offending particle's maps from the grid and keep going.
    #[default]
    Reinitialize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<T, const D: usize> {
    pub grid: GridDesc<T, D>,
    pub n_long: usize,
    pub n_short: usize,
    pub cfl: T,
    pub nu: T,
    pub lambda: LambdaPolicy<T>,
    pub force: Force<T, D>,
    pub particles_per_cell: usize,
    pub solver: SolverParams,
    pub psi_closure: PsiClosure,
    /// Evolve and use the Jacobian gradient in the vorticity-gradient push-forward.
    pub use_hessian: bool,
    pub max_dt: Option<T>,
    /// Cap `dt` so explicit diffusion stays inside `nu dt / dx^2 <= 1 / (2 D)`;
    /// when off, diffusion is subcycled to stay inside that bound instead.
    pub viscous_dt_cap: bool,
    pub jitter_seed: Option<u64>,
    /// Uniform far-field velocity; its normal part is imposed on every wall.
    pub inflow: [T; D],
    pub walls: WallVorticity<T>,
    pub scene: SolidScene<T>,
    pub on_instability: InstabilityPolicy,
    pub max_steps: Option<usize>,
    pub max_time: Option<T>,
    /// Frames between grid dumps (0 disables dumps).
    pub output_every: usize,
    pub scene_name: String,
}

impl<T: Real, const D: usize> SimConfig<T, D> {
    /// Defaults: CFL 0.5 in 3D and 1.0 in 2D, 8 (3D) or 4 (2D) particles per
    /// cell, `n_long = 20`, `n_short = 1`, inviscid, `lambda = 1 / dt`.
    pub fn new(grid: GridDesc<T, D>) -> Self {
        Self {
            grid,
            n_long: 20,
            n_short: 1,
            cfl: if D == 3 { T::lit(0.5) } else { T::one() },
            nu: T::zero(),
            lambda: LambdaPolicy::InverseDt { factor: T::one() },
            force: Force::None,
            particles_per_cell: if D == 3 { 8 } else { 4 },
            solver: SolverParams::default(),
            psi_closure: PsiClosure::Zero,
            use_hessian: true,
            max_dt: None,
            viscous_dt_cap: true,
            jitter_seed: None,
            inflow: [T::zero(); D],
            walls: WallVorticity::FreeSlip,
            scene: SolidScene::default(),
            on_instability: InstabilityPolicy::Reinitialize,
            max_steps: None,
            max_time: None,
            output_every: 0,
            scene_name: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.cfl > T::zero()) {
            return Err(format!("cfl must be positive, got {}", self.cfl));
        }
        if self.n_short == 0 || self.n_short > self.n_long {
            return Err(format!(
                "need 1 <= n_short <= n_long, got n_short = {}, n_long = {}",
                self.n_short, self.n_long
            ));
        }
        if !(self.nu >= T::zero()) {
            return Err(format!("viscosity must be non-negative, got {}", self.nu));
        }
        if self.particles_per_cell == 0 {
            return Err("particles_per_cell must be at least 1".into());
        }
        if let Some(m) = self.max_dt {
            if !(m > T::zero()) {
                return Err(format!("max_dt must be positive, got {m}"));
            }
        }
        if let LambdaPolicy::Fixed(l) = self.lambda {
            if !(l >= T::zero()) {
                return Err(format!("lambda must be non-negative, got {l}"));
            }
        }
        if matches!(self.walls, WallVorticity::Thom { .. }) && D != 2 {
            return Err("Thom wall vorticity is only available in 2D".into());
        }
        if self.grid.cells.iter().any(|&n| n < 4) {
            return Err("every axis needs at least 4 cells".into());
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iters == 0 {
            return Err("solver tolerance and iteration cap must be positive".into());
        }
        Ok(())
    }
}
