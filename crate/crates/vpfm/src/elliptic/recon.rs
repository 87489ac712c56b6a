use super::{Boundary, MgPcg, PoissonProblem, SolverError, SolverParams, SolverStats};
use crate::grid::{curl_vort_to_face, for_each_index, GridDesc, Layout, StaggeredArray, StaggeredField};
use crate::Real;

/// Faces with fluid fraction at or below this value are treated as solid.
pub const ALPHA_MIN: f64 = 0.1;

/// Boundary closure of the vector-potential solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PsiClosure {
    /// Every component vanishes on and beyond the walls.
    #[default]
    Zero,
    /// Tangential components vanish; the wall-normal component has zero
    /// normal derivative, which keeps the potential divergence free.
    DivergenceFree,
}

/// Unknown box of one vector-potential component: the offset of the first
/// unknown along each axis and the box size (planar boxes have `n2 = 1`).
fn potential_box<T: Real, const D: usize>(desc: &GridDesc<T, D>, comp: usize) -> ([usize; D], [usize; 3]) {
    let st = Layout::Vorticity.stagger::<D>(comp);
    let mut off = [0; D];
    let mut n = [1; 3];
    for a in 0..D {
        if st[a] {
            n[a] = desc.cells[a];
        } else {
            off[a] = 1;
            n[a] = desc.cells[a] - 1;
        }
    }
    (off, n)
}

fn box_cells(n: [usize; 3]) -> impl Iterator<Item = [usize; 3]> {
    (0..n[2]).flat_map(move |k| (0..n[1]).flat_map(move |j| (0..n[0]).map(move |i| [i, j, k])))
}

fn potential_problem<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    comp: usize,
    closure: PsiClosure,
) -> PoissonProblem<T> {
    let (_, n) = potential_box(desc, comp);
    let st = Layout::Vorticity.stagger::<D>(comp);
    let bc = std::array::from_fn(|a| {
        if a >= D {
            [Boundary::Neumann; 2]
        } else if closure == PsiClosure::DivergenceFree && st[a] && D == 3 && a == comp {
            [Boundary::Neumann; 2]
        } else {
            [Boundary::Dirichlet; 2]
        }
    });
    PoissonProblem::uniform(n, bc)
}

/// Reusable vector-potential solver: one multigrid hierarchy per component,
/// warm-started from the previous solution.
#[derive(Clone, Debug)]
pub struct VectorPotentialSolver<T, const D: usize> {
    desc: GridDesc<T, D>,
    closure: PsiClosure,
    solvers: Vec<MgPcg<T>>,
    guess: Vec<Vec<T>>,
}

impl<T: Real, const D: usize> VectorPotentialSolver<T, D> {
    pub fn new(desc: &GridDesc<T, D>, closure: PsiClosure, params: SolverParams) -> Result<Self, SolverError> {
        let nc = Layout::Vorticity.num_comps(D);
        let mut solvers = Vec::with_capacity(nc);
        let mut guess = Vec::with_capacity(nc);
        for c in 0..nc {
            let p = potential_problem(desc, c, closure);
            guess.push(vec![T::zero(); p.len()]);
            solvers.push(MgPcg::new(&p, params)?);
        }
        Ok(Self {
            desc: *desc,
            closure,
            solvers,
            guess,
        })
    }

    pub fn closure(&self) -> PsiClosure {
        self.closure
    }

    /// Solves `-lap Psi = omega` per component.
    pub fn solve(
        &mut self,
        omega: &StaggeredField<T, D>,
    ) -> Result<(StaggeredField<T, D>, Vec<SolverStats>), SolverError> {
        if omega.layout != Layout::Vorticity {
            return Err(SolverError::Contract("vector potential source must use the vorticity layout".into()));
        }
        omega
            .check(&self.desc)
            .map_err(|e| SolverError::Contract(e.to_string()))?;
        let h2 = self.desc.dx * self.desc.dx;
        let mut psi = StaggeredField::zeros(&self.desc, Layout::Vorticity);
        let mut stats = Vec::new();
        for c in 0..self.solvers.len() {
            let (off, _) = potential_box(&self.desc, c);
            let src = &omega.comps[c];
            let n = potential_box(&self.desc, c).1;
            let to_arr = |b: [usize; 3]| -> [usize; D] { std::array::from_fn(|a| b[a] + off[a]) };
            let rhs: Vec<T> = box_cells(n).map(|b| h2 * src.get(to_arr(b))).collect();
            let x = &mut self.guess[c];
            stats.push(self.solvers[c].solve(&rhs, x)?);
            let out = &mut psi.comps[c];
            for (v, b) in x.iter().zip(box_cells(n)) {
                out.set(to_arr(b), *v);
            }
        }
        Ok((psi, stats))
    }
}

/// One-shot vector-potential solve from a zero initial guess.
pub fn solve_vector_potential<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    omega: &StaggeredField<T, D>,
    closure: PsiClosure,
    params: &SolverParams,
) -> Result<(StaggeredField<T, D>, Vec<SolverStats>), SolverError> {
    VectorPotentialSolver::new(desc, closure, *params)?.solve(omega)
}

/// Face velocity `curl Psi`; discretely divergence free.
pub fn curl_psi<T: Real, const D: usize>(desc: &GridDesc<T, D>, psi: &StaggeredField<T, D>) -> StaggeredField<T, D> {
    curl_vort_to_face(desc, psi)
}

/// Inputs of the cut-cell harmonic solve. All face fields use the velocity
/// layout; `chi_in` is indexed like a cell-centered array.
#[derive(Clone, Copy, Debug)]
pub struct CutCellInput<'a, T, const D: usize> {
    /// Vortical velocity `curl Psi`.
    pub u_omega: &'a StaggeredField<T, D>,
    /// Fluid fraction of every face.
    pub alpha: &'a StaggeredField<T, D>,
    /// Solid-interior cells, excluded from the system.
    pub chi_in: &'a [bool],
    /// Normal velocity imposed where the fluid does not reach: solid face
    /// velocities inside solids, prescribed inflow/outflow on the domain walls.
    pub u_solid: &'a StaggeredField<T, D>,
}

#[derive(Clone, Debug)]
pub struct HarmonicOutput<T, const D: usize> {
    pub phi: StaggeredArray<T, D>,
    pub u: StaggeredField<T, D>,
    pub stats: SolverStats,
}

/// Fractions after the small-fraction clamp: `alpha` where it exceeds
/// [`ALPHA_MIN`] on an interior face with no solid-interior neighbor, zero
/// elsewhere (including all domain-boundary faces).
pub fn effective_alpha<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    alpha: &StaggeredField<T, D>,
    chi_in: &[bool],
) -> StaggeredField<T, D> {
    let thr = T::lit(ALPHA_MIN);
    let cells = desc.cells;
    let mut out = StaggeredField::zeros(desc, Layout::Velocity);
    for a in 0..D {
        let src = &alpha.comps[a];
        let dst = &mut out.comps[a].data;
        for_each_index(src.shape, |k, idx| {
            if idx[a] == 0 || idx[a] == cells[a] {
                return;
            }
            let mut left = idx;
            left[a] -= 1;
            if chi_in[cell_flat(&cells, &left)] || chi_in[cell_flat(&cells, &idx)] {
                return;
            }
            let v = src.data[k];
            if v > thr {
                dst[k] = v;
            }
        });
    }
    out
}

#[inline(always)]
fn cell_flat<const D: usize>(cells: &[usize; D], i: &[usize; D]) -> usize {
    let mut idx = 0;
    for a in (0..D).rev() {
        idx = idx * cells[a] + i[a];
    }
    idx
}

/// Reusable cut-cell harmonic solver. The multigrid hierarchy is rebuilt only
/// when the clamped fractions change.
#[derive(Clone, Debug)]
pub struct HarmonicSolver<T, const D: usize> {
    desc: GridDesc<T, D>,
    params: SolverParams,
    solver: Option<MgPcg<T>>,
    guess: Vec<T>,
}

impl<T: Real, const D: usize> HarmonicSolver<T, D> {
    pub fn new(desc: &GridDesc<T, D>, params: SolverParams) -> Self {
        Self {
            desc: *desc,
            params,
            solver: None,
            guess: vec![T::zero(); desc.num_cells()],
        }
    }

    fn validate(&self, inp: &CutCellInput<'_, T, D>) -> Result<(), SolverError> {
        let contract = |m: String| SolverError::Contract(m);
        for (name, f) in [("u_omega", inp.u_omega), ("alpha", inp.alpha), ("u_solid", inp.u_solid)] {
            if f.layout != Layout::Velocity {
                return Err(contract(format!("{name} must use the velocity layout")));
            }
            f.check(&self.desc).map_err(|e| contract(format!("{name}: {e}")))?;
            if !f.all_finite() {
                return Err(contract(format!("{name} is not finite")));
            }
        }
        if inp.chi_in.len() != self.desc.num_cells() {
            return Err(contract("chi_in length differs from the cell count".into()));
        }
        let bad = inp
            .alpha
            .comps
            .iter()
            .flat_map(|c| c.data.iter())
            .find(|v| **v < T::zero() || **v > T::one());
        if let Some(v) = bad {
            return Err(contract(format!("fluid fraction {v} outside [0, 1]")));
        }
        Ok(())
    }

    /// Solves for `Phi` so that `u = u_omega - grad Phi` on open faces (and the
    /// solid velocity elsewhere) has zero net flux through every active cell.
    pub fn solve(&mut self, inp: &CutCellInput<'_, T, D>) -> Result<HarmonicOutput<T, D>, SolverError> {
        self.validate(inp)?;
        let desc = self.desc;
        let cells = desc.cells;
        let h = desc.dx;
        let ae = effective_alpha(&desc, inp.alpha, inp.chi_in);

        let n3: [usize; 3] = std::array::from_fn(|a| if a < D { cells[a] } else { 1 });
        let coef: [Vec<T>; 3] = std::array::from_fn(|a| {
            if a < D {
                ae.comps[a].data.clone()
            } else {
                vec![T::zero(); n3[0] * n3[1] * 2]
            }
        });
        let rebuild = match &self.solver {
            Some(s) => !s.same_operator(&coef),
            None => true,
        };
        if rebuild {
            let problem = PoissonProblem {
                shape: n3,
                coef,
                bc: [[Boundary::Neumann; 2]; 3],
                rhs: Vec::new(),
            };
            self.solver = Some(MgPcg::new(&problem, self.params)?);
            self.guess.iter_mut().for_each(|v| *v = T::zero());
        }

        // per-face flux: fluid part through the open fraction, solid part elsewhere
        let flux: Vec<Vec<T>> = (0..D)
            .map(|a| {
                let (uo, us, al) = (&inp.u_omega.comps[a], &inp.u_solid.comps[a], &ae.comps[a]);
                (0..al.data.len())
                    .map(|k| al.data[k] * uo.data[k] + (T::one() - al.data[k]) * us.data[k])
                    .collect()
            })
            .collect();
        let mut rhs = vec![T::zero(); desc.num_cells()];
        for_each_index(cells, |c, idx| {
            let mut div = T::zero();
            for a in 0..D {
                let arr = &ae.comps[a];
                let lo = arr.index(idx);
                let hi = lo + arr.strides()[a];
                div += flux[a][hi] - flux[a][lo];
            }
            rhs[c] = -h * div;
        });
        let solver = self.solver.as_mut().expect("solver built above");
        let stats = solver.solve(&rhs, &mut self.guess)?;

        let phi = StaggeredArray {
            shape: cells,
            stagger: [true; D],
            data: self.guess.clone(),
        };
        let mut u = StaggeredField::zeros(&desc, Layout::Velocity);
        for a in 0..D {
            let al = &ae.comps[a];
            let (uo, us) = (&inp.u_omega.comps[a], &inp.u_solid.comps[a]);
            let out = &mut u.comps[a].data;
            for_each_index(al.shape, |k, idx| {
                if al.data[k] > T::zero() {
                    let mut left = idx;
                    left[a] -= 1;
                    let g = (phi.data[cell_flat(&cells, &idx)] - phi.data[cell_flat(&cells, &left)]) / h;
                    out[k] = uo.data[k] - g;
                } else {
                    out[k] = us.data[k];
                }
            });
        }
        Ok(HarmonicOutput { phi, u, stats })
    }
}

/// One-shot cut-cell harmonic solve.
pub fn solve_harmonic_cutcell<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    input: &CutCellInput<'_, T, D>,
    params: &SolverParams,
) -> Result<HarmonicOutput<T, D>, SolverError> {
    HarmonicSolver::new(desc, *params).solve(input)
}
