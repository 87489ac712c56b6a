use super::{face_shape, Boundary, PoissonProblem, Preconditioner, SolverError, SolverParams, SolverStats};
use crate::Real;
use std::collections::VecDeque;

/// One grid level of the face-coefficient operator.
#[derive(Clone, Debug)]
pub(crate) struct Level<T> {
    pub n: [usize; 3],
    pub cf: [Vec<T>; 3],
    pub bc: [[Boundary; 2]; 3],
    pub diag: Vec<T>,
}

type AxisMap<T> = Vec<(usize, T, usize, T)>;

impl<T: Real> Level<T> {
    pub fn from_problem(p: &PoissonProblem<T>) -> Self {
        Self::build(p.shape, p.coef.clone(), p.bc)
    }

    fn build(n: [usize; 3], cf: [Vec<T>; 3], bc: [[Boundary; 2]; 3]) -> Self {
        let [n0, n1, n2] = n;
        let mut diag = vec![T::zero(); n0 * n1 * n2];
        let dir = |a: usize, s: usize| bc[a][s] == Boundary::Dirichlet;
        for k in 0..n2 {
            for j in 0..n1 {
                for i in 0..n0 {
                    let c = i + n0 * (j + n1 * k);
                    let fx = i + (n0 + 1) * (j + n1 * k);
                    let fy = i + n0 * (j + (n1 + 1) * k);
                    let mut s = T::zero();
                    if i > 0 || dir(0, 0) {
                        s += cf[0][fx];
                    }
                    if i + 1 < n0 || dir(0, 1) {
                        s += cf[0][fx + 1];
                    }
                    if j > 0 || dir(1, 0) {
                        s += cf[1][fy];
                    }
                    if j + 1 < n1 || dir(1, 1) {
                        s += cf[1][fy + n0];
                    }
                    if k > 0 || dir(2, 0) {
                        s += cf[2][c];
                    }
                    if k + 1 < n2 || dir(2, 1) {
                        s += cf[2][c + n0 * n1];
                    }
                    diag[c] = s;
                }
            }
        }
        Self { n, cf, bc, diag }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    #[inline(always)]
    fn nb_sum(&self, x: &[T], i: usize, j: usize, k: usize) -> T {
        let [n0, n1, n2] = self.n;
        let c = i + n0 * (j + n1 * k);
        let fx = i + (n0 + 1) * (j + n1 * k);
        let fy = i + n0 * (j + (n1 + 1) * k);
        let n01 = n0 * n1;
        let mut s = T::zero();
        if i > 0 {
            s += self.cf[0][fx] * x[c - 1];
        }
        if i + 1 < n0 {
            s += self.cf[0][fx + 1] * x[c + 1];
        }
        if j > 0 {
            s += self.cf[1][fy] * x[c - n0];
        }
        if j + 1 < n1 {
            s += self.cf[1][fy + n0] * x[c + n0];
        }
        if k > 0 {
            s += self.cf[2][c] * x[c - n01];
        }
        if k + 1 < n2 {
            s += self.cf[2][c + n01] * x[c + n01];
        }
        s
    }

    pub fn apply(&self, x: &[T], y: &mut [T]) {
        let [n0, n1, n2] = self.n;
        for k in 0..n2 {
            for j in 0..n1 {
                for i in 0..n0 {
                    let c = i + n0 * (j + n1 * k);
                    y[c] = self.diag[c] * x[c] - self.nb_sum(x, i, j, k);
                }
            }
        }
    }

    fn residual(&self, b: &[T], x: &[T], r: &mut [T]) {
        let [n0, n1, n2] = self.n;
        for k in 0..n2 {
            for j in 0..n1 {
                for i in 0..n0 {
                    let c = i + n0 * (j + n1 * k);
                    r[c] = b[c] - (self.diag[c] * x[c] - self.nb_sum(x, i, j, k));
                }
            }
        }
    }

    /// Gauss-Seidel update of the cells with `(i + j + k) % 2 == color`.
    fn sweep(&self, b: &[T], x: &mut [T], color: usize) {
        let [n0, n1, n2] = self.n;
        for k in 0..n2 {
            for j in 0..n1 {
                let mut i = (color + j + k) % 2;
                while i < n0 {
                    let c = i + n0 * (j + n1 * k);
                    let d = self.diag[c];
                    if d > T::zero() {
                        x[c] = (b[c] + self.nb_sum(x, i, j, k)) / d;
                    }
                    i += 2;
                }
            }
        }
    }

    fn coarsen(&self) -> (Level<T>, [AxisMap<T>; 3]) {
        let nf = self.n;
        let nc: [usize; 3] = std::array::from_fn(|a| if nf[a] == 1 { 1 } else { nf[a].div_ceil(2) });
        let half = T::lit(0.5);
        let cf = std::array::from_fn(|a| {
            let fsc = face_shape(nc, a);
            let fsf = face_shape(nf, a);
            let mut out = vec![T::zero(); fsc[0] * fsc[1] * fsc[2]];
            for k in 0..fsc[2] {
                for j in 0..fsc[1] {
                    for i in 0..fsc[0] {
                        let ci = [i, j, k];
                        let mut lo = [0; 3];
                        let mut hi = [0; 3];
                        for b in 0..3 {
                            if b == a {
                                lo[b] = (2 * ci[b]).min(nf[b]);
                                hi[b] = lo[b] + 1;
                            } else {
                                lo[b] = 2 * ci[b];
                                hi[b] = (2 * ci[b] + 2).min(nf[b]);
                            }
                        }
                        let mut s = T::zero();
                        for fk in lo[2]..hi[2] {
                            for fj in lo[1]..hi[1] {
                                for fi in lo[0]..hi[0] {
                                    s += self.cf[a][fi + fsf[0] * (fj + fsf[1] * fk)];
                                }
                            }
                        }
                        out[i + fsc[0] * (j + fsc[1] * k)] = s * half;
                    }
                }
            }
            out
        });
        let maps = std::array::from_fn(|a| {
            let (three, quarter) = (T::lit(0.75), T::lit(0.25));
            (0..nf[a])
                .map(|i| {
                    if nf[a] == 1 {
                        return (0, T::one(), 0, T::zero());
                    }
                    let c = i / 2;
                    let (nb, side) = if i % 2 == 0 { (c as isize - 1, 0) } else { (c as isize + 1, 1) };
                    if nb >= 0 && (nb as usize) < nc[a] {
                        (c, three, nb as usize, quarter)
                    } else if self.bc[a][side] == Boundary::Dirichlet {
                        (c, three, c, T::zero())
                    } else {
                        (c, T::one(), c, T::zero())
                    }
                })
                .collect()
        });
        (Level::build(nc, cf, self.bc), maps)
    }
}

/// Adds the prolongation of `coarse` to `fine`.
fn prolong_add<T: Real>(maps: &[AxisMap<T>; 3], nc: [usize; 3], coarse: &[T], fine: &mut [T]) {
    let (m0, m1, m2) = (&maps[0], &maps[1], &maps[2]);
    let mut c = 0;
    for &(k0, wk0, k1, wk1) in m2.iter() {
        for &(j0, wj0, j1, wj1) in m1.iter() {
            let r00 = nc[0] * (j0 + nc[1] * k0);
            let r10 = nc[0] * (j1 + nc[1] * k0);
            let r01 = nc[0] * (j0 + nc[1] * k1);
            let r11 = nc[0] * (j1 + nc[1] * k1);
            for &(i0, wi0, i1, wi1) in m0.iter() {
                let at = |r: usize| wi0 * coarse[r + i0] + wi1 * coarse[r + i1];
                fine[c] += wk0 * (wj0 * at(r00) + wj1 * at(r10)) + wk1 * (wj0 * at(r01) + wj1 * at(r11));
                c += 1;
            }
        }
    }
}

/// Transpose of [`prolong_add`]: overwrites `coarse`.
fn restrict<T: Real>(maps: &[AxisMap<T>; 3], nc: [usize; 3], fine: &[T], coarse: &mut [T]) {
    coarse.iter_mut().for_each(|v| *v = T::zero());
    let (m0, m1, m2) = (&maps[0], &maps[1], &maps[2]);
    let mut c = 0;
    for &(k0, wk0, k1, wk1) in m2.iter() {
        for &(j0, wj0, j1, wj1) in m1.iter() {
            let rows = [
                (nc[0] * (j0 + nc[1] * k0), wk0 * wj0),
                (nc[0] * (j1 + nc[1] * k0), wk0 * wj1),
                (nc[0] * (j0 + nc[1] * k1), wk1 * wj0),
                (nc[0] * (j1 + nc[1] * k1), wk1 * wj1),
            ];
            for &(i0, wi0, i1, wi1) in m0.iter() {
                let v = fine[c];
                c += 1;
                for &(r, w) in &rows {
                    if w != T::zero() {
                        coarse[r + i0] += w * wi0 * v;
                        coarse[r + i1] += w * wi1 * v;
                    }
                }
            }
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.as_f64() * y.as_f64()).sum()
}

/// Multigrid-preconditioned conjugate gradient solver for a fixed operator.
///
/// The hierarchy is built once; [`MgPcg::solve`] may be called repeatedly
/// with different right-hand sides.
#[derive(Clone, Debug)]
pub struct MgPcg<T> {
    levels: Vec<Level<T>>,
    maps: Vec<[AxisMap<T>; 3]>,
    xs: Vec<Vec<T>>,
    bs: Vec<Vec<T>>,
    rs: Vec<Vec<T>>,
    params: SolverParams,
    /// Floating (Dirichlet-free) component of each cell, `u32::MAX` otherwise.
    comp: Vec<u32>,
    comp_size: Vec<usize>,
}

impl<T: Real> MgPcg<T> {
    pub fn new(problem: &PoissonProblem<T>, params: SolverParams) -> Result<Self, SolverError> {
        for a in 0..3 {
            let fs = face_shape(problem.shape, a);
            if problem.coef[a].len() != fs[0] * fs[1] * fs[2] {
                return Err(SolverError::Contract(format!("face coefficients on axis {a} have wrong length")));
            }
        }
        if problem.shape.iter().any(|&n| n == 0) {
            return Err(SolverError::Contract("empty problem".into()));
        }
        let mut levels = vec![Level::from_problem(problem)];
        let mut maps = Vec::new();
        loop {
            let last = levels.last().unwrap();
            if last.n.iter().all(|&m| m <= 2) || last.len() <= 8 || levels.len() >= 24 {
                break;
            }
            let (coarse, map) = last.coarsen();
            levels.push(coarse);
            maps.push(map);
        }
        let xs = levels.iter().map(|l| vec![T::zero(); l.len()]).collect();
        let bs = levels.iter().map(|l| vec![T::zero(); l.len()]).collect();
        let rs = levels.iter().map(|l| vec![T::zero(); l.len()]).collect();
        let (comp, comp_size) = floating_components(&levels[0]);
        Ok(Self {
            levels,
            maps,
            xs,
            bs,
            rs,
            params,
            comp,
            comp_size,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Number of connected components without a Dirichlet face.
    pub fn num_floating_components(&self) -> usize {
        self.comp_size.len()
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// Whether this solver was built for exactly these face coefficients.
    pub fn same_operator(&self, coef: &[Vec<T>; 3]) -> bool {
        self.levels[0].cf.iter().zip(coef).all(|(a, b)| a == b)
    }

    /// Removes the per-component mean on floating components and zeroes
    /// decoupled cells.
    pub fn project(&self, v: &mut [T]) {
        let diag = &self.levels[0].diag;
        for (x, d) in v.iter_mut().zip(diag) {
            if *d <= T::zero() {
                *x = T::zero();
            }
        }
        if self.comp_size.is_empty() {
            return;
        }
        let mut sums = vec![0.0f64; self.comp_size.len()];
        for (x, &c) in v.iter().zip(&self.comp) {
            if c != u32::MAX {
                sums[c as usize] += x.as_f64();
            }
        }
        let means: Vec<T> = sums
            .iter()
            .zip(&self.comp_size)
            .map(|(s, &n)| T::lit(s / n as f64))
            .collect();
        for (x, &c) in v.iter_mut().zip(&self.comp) {
            if c != u32::MAX {
                *x -= means[c as usize];
            }
        }
    }

    fn vcycle(&mut self) {
        let nl = self.levels.len();
        let nu = self.params.smooth_sweeps;
        for l in 0..nl - 1 {
            let lev = &self.levels[l];
            let x = &mut self.xs[l];
            let b = &self.bs[l];
            x.iter_mut().for_each(|v| *v = T::zero());
            for _ in 0..nu {
                lev.sweep(b, x, 0);
                lev.sweep(b, x, 1);
            }
            lev.residual(b, x, &mut self.rs[l]);
            let (_, bc) = self.bs.split_at_mut(l + 1);
            restrict(&self.maps[l], self.levels[l + 1].n, &self.rs[l], &mut bc[0]);
        }
        {
            let lev = &self.levels[nl - 1];
            let x = &mut self.xs[nl - 1];
            let b = &self.bs[nl - 1];
            x.iter_mut().for_each(|v| *v = T::zero());
            for _ in 0..self.params.coarse_sweeps {
                lev.sweep(b, x, 0);
                lev.sweep(b, x, 1);
            }
            for _ in 0..self.params.coarse_sweeps {
                lev.sweep(b, x, 1);
                lev.sweep(b, x, 0);
            }
        }
        for l in (0..nl - 1).rev() {
            let (fine, coarse) = self.xs.split_at_mut(l + 1);
            prolong_add(&self.maps[l], self.levels[l + 1].n, &coarse[0], &mut fine[l]);
            let lev = &self.levels[l];
            let x = &mut fine[l];
            let b = &self.bs[l];
            for _ in 0..nu {
                lev.sweep(b, x, 1);
                lev.sweep(b, x, 0);
            }
        }
    }

    fn precondition(&mut self, r: &[T], z: &mut [T], kind: Preconditioner) {
        match kind {
            Preconditioner::Multigrid => {
                self.bs[0].copy_from_slice(r);
                self.vcycle();
                z.copy_from_slice(&self.xs[0]);
            }
            Preconditioner::Jacobi => {
                for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.levels[0].diag) {
                    *zi = if *d > T::zero() { *ri / *d } else { T::zero() };
                }
            }
        }
        self.project(z);
    }

    /// Solves `A x = rhs`, using `x` as the initial guess.
    ///
    /// The rhs is projected onto the range of `A` (mean removed on every
    /// floating component) and the solution is returned mean-free there.
    pub fn solve(&mut self, rhs: &[T], x: &mut [T]) -> Result<SolverStats, SolverError> {
        let n = self.levels[0].len();
        if rhs.len() != n || x.len() != n {
            return Err(SolverError::Contract(format!(
                "vector length mismatch: rhs {}, x {}, expected {n}",
                rhs.len(),
                x.len()
            )));
        }
        if !rhs.iter().all(|v| v.is_finite()) {
            return Err(SolverError::Contract("rhs is not finite".into()));
        }
        let mut b = rhs.to_vec();
        self.project(&mut b);
        let bnorm = dot(&b, &b).sqrt();
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = T::zero());
            return Ok(SolverStats::trivial());
        }
        if !x.iter().all(|v| v.is_finite()) {
            x.iter_mut().for_each(|v| *v = T::zero());
        }
        self.project(x);
        match self.pcg(&b, bnorm, x, Preconditioner::Multigrid, 0) {
            Err(SolverError::Breakdown(st)) => {
                log::warn!(
                    "multigrid preconditioner broke down after {} iterations; retrying with Jacobi",
                    st.iterations
                );
                self.pcg(&b, bnorm, x, Preconditioner::Jacobi, st.iterations)
            }
            other => other,
        }
    }

    fn pcg(
        &mut self,
        b: &[T],
        bnorm: f64,
        x: &mut [T],
        kind: Preconditioner,
        start: usize,
    ) -> Result<SolverStats, SolverError> {
        let n = b.len();
        let tol = self.params.tol;
        let mut r = vec![T::zero(); n];
        self.levels[0].residual(b, x, &mut r);
        self.project(&mut r);
        let mut stats = SolverStats {
            iterations: start,
            final_relative_residual: dot(&r, &r).sqrt() / bnorm,
            converged: false,
            preconditioner: kind,
        };
        if stats.final_relative_residual <= tol {
            stats.converged = true;
            return Ok(stats);
        }
        let mut z = vec![T::zero(); n];
        let mut ap = vec![T::zero(); n];
        self.precondition(&r, &mut z, kind);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        if !(rz > 0.0 && rz.is_finite()) {
            return Err(SolverError::Breakdown(stats));
        }
        while stats.iterations < self.params.max_iters {
            stats.iterations += 1;
            self.levels[0].apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0 && pap.is_finite()) {
                return Err(SolverError::Breakdown(stats));
            }
            let alpha = T::lit(rz / pap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            stats.final_relative_residual = dot(&r, &r).sqrt() / bnorm;
            if stats.final_relative_residual <= tol {
                stats.converged = true;
                self.project(x);
                return Ok(stats);
            }
            self.precondition(&r, &mut z, kind);
            let rz_new = dot(&r, &z);
            if !(rz_new > 0.0 && rz_new.is_finite()) {
                return Err(SolverError::Breakdown(stats));
            }
            let beta = T::lit(rz_new / rz);
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        self.project(x);
        Err(SolverError::NotConverged(stats))
    }
}

/// Labels connected components of active cells that touch no Dirichlet face.
fn floating_components<T: Real>(level: &Level<T>) -> (Vec<u32>, Vec<usize>) {
    let [n0, n1, n2] = level.n;
    let len = level.len();
    let mut label = vec![u32::MAX; len];
    let mut seen = vec![false; len];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    let mut members = Vec::new();
    let dir = |a: usize, s: usize| level.bc[a][s] == Boundary::Dirichlet;
    for start in 0..len {
        if seen[start] || level.diag[start] <= T::zero() {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        members.clear();
        let mut pinned = false;
        while let Some(c) = queue.pop_front() {
            members.push(c);
            let i = c % n0;
            let j = (c / n0) % n1;
            let k = c / (n0 * n1);
            let fx = i + (n0 + 1) * (j + n1 * k);
            let fy = i + n0 * (j + (n1 + 1) * k);
            let links = [
                (i > 0, level.cf[0][fx], c.wrapping_sub(1), (0, 0)),
                (i + 1 < n0, level.cf[0][fx + 1], c + 1, (0, 1)),
                (j > 0, level.cf[1][fy], c.wrapping_sub(n0), (1, 0)),
                (j + 1 < n1, level.cf[1][fy + n0], c + n0, (1, 1)),
                (k > 0, level.cf[2][c], c.wrapping_sub(n0 * n1), (2, 0)),
                (k + 1 < n2, level.cf[2][c + n0 * n1], c + n0 * n1, (2, 1)),
            ];
            for (inside, w, nb, (a, s)) in links {
                if w <= T::zero() {
                    continue;
                }
                if inside {
                    if !seen[nb] {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                } else if dir(a, s) {
                    pinned = true;
                }
            }
        }
        if !pinned {
            let id = sizes.len() as u32;
            for &m in &members {
                label[m] = id;
            }
            sizes.push(members.len());
        }
    }
    (label, sizes)
}
