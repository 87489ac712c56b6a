//! Linear solvers and the two velocity reconstruction solves.
//!
//! All systems are assembled on a box of cells (`[n0, n1, n2]`, with `n2 = 1`
//! for planar problems) using the finite-volume form
//! `(A x)_i = sum_f c_f (x_i - x_nb(f))`, where the sum runs over the faces
//! of cell `i`. Boundary faces either pin a zero ghost (Dirichlet) or carry
//! no flux (Neumann). This is the symmetric, diagonally dominant, positive
//! semi-definite class both the vector-potential and the harmonic solves
//! fall into.

mod multigrid;
mod recon;

pub use multigrid::MgPcg;
pub use recon::{
    curl_psi, solve_harmonic_cutcell, solve_vector_potential, CutCellInput, HarmonicOutput,
    effective_alpha, HarmonicSolver, PsiClosure, VectorPotentialSolver, ALPHA_MIN,
};

use crate::Real;
use thiserror::Error;

/// Boundary treatment of one side of the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Zero ghost value; the boundary face coefficient adds to the diagonal.
    Dirichlet,
    /// No flux through the boundary face.
    Neumann,
}

/// A symmetric positive semi-definite face-coefficient Poisson system.
#[derive(Clone, Debug)]
pub struct PoissonProblem<T> {
    pub shape: [usize; 3],
    /// `coef[a]` holds the coefficients of the faces normal to axis `a`,
    /// shaped like the cell box with one extra entry along `a`.
    pub coef: [Vec<T>; 3],
    /// `bc[a][0]` / `bc[a][1]`: low / high side along axis `a`.
    pub bc: [[Boundary; 2]; 3],
    pub rhs: Vec<T>,
}

pub(crate) fn face_shape(n: [usize; 3], a: usize) -> [usize; 3] {
    let mut s = n;
    s[a] += 1;
    s
}

impl<T: Real> PoissonProblem<T> {
    /// Unit coefficients on every face of non-degenerate axes; zero rhs.
    pub fn uniform(shape: [usize; 3], bc: [[Boundary; 2]; 3]) -> Self {
        let coef = std::array::from_fn(|a| {
            let fs = face_shape(shape, a);
            let v = if shape[a] > 1 { T::one() } else { T::zero() };
            vec![v; fs[0] * fs[1] * fs[2]]
        });
        let n = shape[0] * shape[1] * shape[2];
        Self {
            shape,
            coef,
            bc,
            rhs: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Validates shapes and coefficient signs.
    pub fn check(&self) -> Result<(), SolverError> {
        let n = self.len();
        if n == 0 {
            return Err(SolverError::Contract("empty problem".into()));
        }
        if self.rhs.len() != n {
            return Err(SolverError::Contract(format!(
                "rhs has {} entries, expected {n}",
                self.rhs.len()
            )));
        }
        for a in 0..3 {
            let fs = face_shape(self.shape, a);
            if self.coef[a].len() != fs[0] * fs[1] * fs[2] {
                return Err(SolverError::Contract(format!("face coefficients on axis {a} have wrong length")));
            }
            if self.coef[a].iter().any(|c| !c.is_finite() || *c < T::zero()) {
                return Err(SolverError::Contract(format!(
                    "face coefficients on axis {a} must be finite and non-negative"
                )));
            }
        }
        if !self.rhs.iter().all(|v| v.is_finite()) {
            return Err(SolverError::Contract("rhs is not finite".into()));
        }
        Ok(())
    }

    /// Matrix-free product `A x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let level = multigrid::Level::from_problem(self);
        let mut y = vec![T::zero(); x.len()];
        level.apply(x, &mut y);
        y
    }

    /// Diagonal of `A`; zero marks a cell decoupled from everything.
    pub fn diagonal(&self) -> Vec<T> {
        multigrid::Level::from_problem(self).diag
    }
}

/// Solver knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    /// Relative residual target `|b - A x| / |b|`.
    pub tol: f64,
    pub max_iters: usize,
    /// Red-black Gauss-Seidel sweeps before and after each coarse correction.
    pub smooth_sweeps: usize,
    /// Symmetric sweeps on the coarsest level.
    pub coarse_sweeps: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 200,
            smooth_sweeps: 2,
            coarse_sweeps: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    Multigrid,
    /// Diagonal fallback taken after a breakdown of the multigrid run.
    Jacobi,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
    pub preconditioner: Preconditioner,
}

impl SolverStats {
    pub(crate) fn trivial() -> Self {
        Self {
            iterations: 0,
            final_relative_residual: 0.0,
            converged: true,
            preconditioner: Preconditioner::Multigrid,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("solver did not converge: {} iterations, relative residual {:.3e}", .0.iterations, .0.final_relative_residual)]
    NotConverged(SolverStats),
    #[error("conjugate gradient breakdown after {} iterations (relative residual {:.3e})", .0.iterations, .0.final_relative_residual)]
    Breakdown(SolverStats),
    #[error("invalid solver input: {0}")]
    Contract(String),
}

/// One-shot MG-PCG solve of `problem` from a zero initial guess.
pub fn mgpcg_solve<T: Real>(
    problem: &PoissonProblem<T>,
    params: &SolverParams,
) -> Result<(Vec<T>, SolverStats), SolverError> {
    problem.check()?;
    let mut solver = MgPcg::new(problem, *params)?;
    let mut x = vec![T::zero(); problem.len()];
    let stats = solver.solve(&problem.rhs, &mut x)?;
    Ok((x, stats))
}

#[cfg(test)]
mod tests;
