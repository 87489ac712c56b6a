use super::*;
use crate::grid::{curl_vort_to_face, divergence, laplacian_edge, Ghost, GridDesc, Layout, StaggeredField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIR: [[Boundary; 2]; 3] = [[Boundary::Dirichlet; 2]; 3];
const NEU: [[Boundary; 2]; 3] = [[Boundary::Neumann; 2]; 3];

fn random_coef(shape: [usize; 3], rng: &mut ChaCha8Rng) -> [Vec<f64>; 3] {
    std::array::from_fn(|a| {
        let fs = face_shape(shape, a);
        (0..fs[0] * fs[1] * fs[2]).map(|_| rng.gen_range(0.2..2.0)).collect()
    })
}

fn dotp(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn zero_rhs_gives_zero_in_zero_iterations() {
    let p = PoissonProblem::<f64>::uniform([16, 16, 1], DIR);
    let (x, st) = mgpcg_solve(&p, &SolverParams::default()).unwrap();
    assert_eq!(st.iterations, 0);
    assert!(st.converged);
    assert!(x.iter().all(|v| *v == 0.0));
}

#[test]
fn poisson_64_converges_within_iteration_bound() {
    let n = 64;
    let mut p = PoissonProblem::<f64>::uniform([n, n, 1], DIR);
    let h = 1.0 / n as f64;
    for j in 0..n {
        for i in 0..n {
            let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            p.rhs[i + n * j] = h * h * (x * (1.0 - x) + (3.0 * y).sin() * (x * 5.0).cos());
        }
    }
    let (x, st) = mgpcg_solve(&p, &SolverParams::default()).unwrap();
    assert!(st.converged && st.iterations <= 30, "{st:?}");
    let r: Vec<f64> = p.apply(&x).iter().zip(&p.rhs).map(|(a, b)| b - a).collect();
    assert!(dotp(&r, &r).sqrt() <= 1e-6 * dotp(&p.rhs, &p.rhs).sqrt());
}

#[test]
fn recovers_manufactured_solution_with_variable_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = [12, 10, 9];
    let mut p = PoissonProblem::<f64>::uniform(shape, DIR);
    p.coef = random_coef(shape, &mut rng);
    p.bc[2] = [Boundary::Neumann, Boundary::Dirichlet];
    let xs: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    p.rhs = p.apply(&xs);
    let params = SolverParams {
        tol: 1e-10,
        ..Default::default()
    };
    let (x, st) = mgpcg_solve(&p, &params).unwrap();
    assert!(st.converged);
    let err = x.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "max error {err}");
}

#[test]
fn pure_neumann_projects_rhs_and_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shape = [16, 12, 1];
    let mut p = PoissonProblem::<f64>::uniform(shape, NEU);
    p.coef = random_coef(shape, &mut rng);
    p.coef[2].iter_mut().for_each(|c| *c = 0.0);
    // incompatible rhs: nonzero mean
    p.rhs = (0..p.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let (x, st) = mgpcg_solve(&p, &SolverParams::default()).unwrap();
    assert!(st.converged);
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    assert!(mean.abs() < 1e-12);
    let m = p.rhs.iter().sum::<f64>() / p.len() as f64;
    let b: Vec<f64> = p.rhs.iter().map(|v| v - m).collect();
    let r: Vec<f64> = p.apply(&x).iter().zip(&b).map(|(a, b)| b - a).collect();
    assert!(dotp(&r, &r).sqrt() <= 1e-6 * dotp(&b, &b).sqrt());
}

#[test]
fn reports_non_convergence_with_stats() {
    let mut p = PoissonProblem::<f64>::uniform([32, 32, 1], DIR);
    p.rhs.iter_mut().enumerate().for_each(|(i, v)| *v = (i % 7) as f64);
    let params = SolverParams {
        max_iters: 1,
        tol: 1e-14,
        ..Default::default()
    };
    match mgpcg_solve(&p, &params) {
        Err(SolverError::NotConverged(st)) => assert_eq!(st.iterations, 1),
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn rejects_negative_coefficients() {
    let mut p = PoissonProblem::<f64>::uniform([8, 8, 1], DIR);
    p.coef[0][3] = -1.0;
    assert!(matches!(mgpcg_solve(&p, &SolverParams::default()), Err(SolverError::Contract(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn operator_is_symmetric(seed in 0u64..1000, nx in 4usize..9, ny in 4usize..9, nz in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = [nx, ny, nz];
        let mut p = PoissonProblem::<f64>::uniform(shape, DIR);
        p.coef = random_coef(shape, &mut rng);
        p.bc[0][1] = Boundary::Neumann;
        let x: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l = dotp(&p.apply(&x), &y);
        let r = dotp(&x, &p.apply(&y));
        prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
        // diagonal dominance with non-negative diagonal
        let d = p.diagonal();
        prop_assert!(d.iter().all(|v| *v >= 0.0));
        let ones = vec![1.0; p.len()];
        prop_assert!(p.apply(&ones).iter().all(|v| *v >= -1e-12));
    }
}

fn desc2(n: usize) -> GridDesc<f64, 2> {
    GridDesc::unit([n, n], 1.0).unwrap()
}

fn desc3(n: usize) -> GridDesc<f64, 3> {
    GridDesc::unit([n, n, n], 1.0).unwrap()
}

#[test]
fn zero_vorticity_gives_zero_potential() {
    let d = desc3(8);
    let w = StaggeredField::zeros(&d, Layout::Vorticity);
    let (psi, st) = solve_vector_potential(&d, &w, PsiClosure::Zero, &SolverParams::default()).unwrap();
    assert_eq!(psi.max_abs(), 0.0);
    assert!(st.iter().all(|s| s.iterations == 0));
}

fn random_potential<const D: usize>(d: &GridDesc<f64, D>, seed: u64) -> StaggeredField<f64, D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi = StaggeredField::zeros(d, Layout::Vorticity);
    for c in psi.comps.iter_mut() {
        for k in 0..c.data.len() {
            let i = c.multi_index(k);
            if !c.on_boundary(i) {
                c.data[k] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    psi
}

fn manufactured<const D: usize>(d: &GridDesc<f64, D>, closure: PsiClosure) {
    let ghost = match closure {
        PsiClosure::Zero => Ghost::Zero,
        PsiClosure::DivergenceFree => Ghost::Mirror,
    };
    let target = random_potential(d, 11);
    let mut omega = StaggeredField::zeros(d, Layout::Vorticity);
    for c in 0..omega.comps.len() {
        let lap = laplacian_edge(d, &target, c, ghost);
        omega.comps[c].data = lap.data.iter().map(|v| -v).collect();
    }
    let params = SolverParams {
        tol: 1e-11,
        ..Default::default()
    };
    let (psi, _) = solve_vector_potential(d, &omega, closure, &params).unwrap();
    let err = psi.max_diff(&target);
    assert!(err < 1e-7, "{closure:?} error {err}");
}

#[test]
fn vector_potential_recovers_manufactured_potential() {
    manufactured(&desc2(24), PsiClosure::Zero);
    manufactured(&desc3(10), PsiClosure::Zero);
    manufactured(&desc3(10), PsiClosure::DivergenceFree);
}

#[test]
fn single_mode_matches_discrete_eigenvalue() {
    let n = 32;
    let d = desc2(n);
    let h = d.dx;
    let pi = std::f64::consts::PI;
    let omega = StaggeredField::from_fn(&d, Layout::Vorticity, |_, p| (pi * p[0]).sin() * (pi * p[1]).sin());
    let lam = 2.0 * 4.0 / (h * h) * (pi * h / 2.0).sin().powi(2);
    let params = SolverParams {
        tol: 1e-10,
        ..Default::default()
    };
    let (psi, _) = solve_vector_potential(&d, &omega, PsiClosure::Zero, &params).unwrap();
    let mut expect = omega.clone();
    expect.scale(1.0 / lam);
    expect.zero_boundary();
    assert!(psi.max_diff(&expect) < 1e-9 * expect.max_abs().max(1.0) * 10.0);
}

#[test]
fn curl_of_potential_is_solenoidal() {
    let d = desc3(9);
    let psi = random_potential(&d, 2);
    let u = curl_psi(&d, &psi);
    let div = divergence(&d, &u);
    assert!(div.max_abs() <= 1e-12 * u.max_abs() / d.dx);
    let z = curl_psi(&d, &StaggeredField::zeros(&d, Layout::Vorticity));
    assert_eq!(z.max_abs(), 0.0);
}

#[test]
fn point_vortex_streamfunction_gives_swirl() {
    let n = 64;
    let d = desc2(n);
    let gamma = 1.0;
    let c = [0.5 + 0.3 * d.dx, 0.5 + 0.2 * d.dx];
    let psi = StaggeredField::from_fn(&d, Layout::Vorticity, |_, p| {
        let r = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        -gamma / (2.0 * std::f64::consts::PI) * r.ln()
    });
    let u = curl_psi(&d, &psi);
    // dense oracle: direct differences of the analytic potential at face ends
    let f = |x: f64, y: f64| -gamma / (2.0 * std::f64::consts::PI) * ((x - c[0]).hypot(y - c[1])).ln();
    let h = d.dx;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=n {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let ux = (f(x, y + h) - f(x, y)) / h;
            worst = worst.max((u.comps[0].get([i, j]) - ux).abs());
        }
    }
    assert!(worst < 1e-10, "oracle mismatch {worst}");
    // azimuthal speed follows gamma / (2 pi r) away from the core
    for &r in &[0.15, 0.25, 0.35] {
        let i = ((c[0] + r) / h).round() as usize;
        let j = (c[1] / h - 0.5).round() as usize;
        let pos = u.comps[1].position(&d, [i, j]);
        let rr = (pos[0] - c[0]).hypot(pos[1] - c[1]);
        let v = u.comps[1].get([i, j]);
        let expect = gamma / (2.0 * std::f64::consts::PI * rr);
        assert!((v - expect).abs() < 0.02 * expect, "r={rr} v={v} expect={expect}");
    }
}

fn open_box_input<const D: usize>(d: &GridDesc<f64, D>) -> (StaggeredField<f64, D>, StaggeredField<f64, D>, Vec<bool>) {
    let alpha = StaggeredField::from_fn(d, Layout::Velocity, |_, _| 1.0);
    let us = StaggeredField::zeros(d, Layout::Velocity);
    (alpha, us, vec![false; d.num_cells()])
}

#[test]
fn harmonic_without_solids_keeps_solenoidal_velocity() {
    let d = desc2(32);
    let psi = random_potential(&d, 9);
    let uo = curl_vort_to_face(&d, &psi);
    let (alpha, us, chi) = open_box_input(&d);
    let inp = CutCellInput {
        u_omega: &uo,
        alpha: &alpha,
        chi_in: &chi,
        u_solid: &us,
    };
    let out = solve_harmonic_cutcell(&d, &inp, &SolverParams::default()).unwrap();
    assert!(out.phi.max_abs() < 1e-9);
    assert!(out.u.max_diff(&uo) < 1e-9);
}

#[test]
fn full_fractions_reduce_to_uncut_operator() {
    let d = desc3(8);
    let (alpha, mut us, chi) = open_box_input(&d);
    // inflow on the left wall, outflow on the right
    for j in 0..8 {
        for k in 0..8 {
            us.comps[0].set([0, j, k], 1.0);
            us.comps[0].set([8, j, k], 1.0);
        }
    }
    let ae = effective_alpha(&d, &alpha, &chi);
    let uniform = PoissonProblem::<f64>::uniform([8, 8, 8], NEU);
    for a in 0..3 {
        for (k, (x, y)) in ae.comps[a].data.iter().zip(&uniform.coef[a]).enumerate() {
            let idx = ae.comps[a].multi_index(k);
            let boundary = idx[a] == 0 || idx[a] == 8;
            assert_eq!(*x, if boundary { 0.0 } else { *y });
        }
    }
    let uo = StaggeredField::zeros(&d, Layout::Velocity);
    let inp = CutCellInput {
        u_omega: &uo,
        alpha: &alpha,
        chi_in: &chi,
        u_solid: &us,
    };
    let out = solve_harmonic_cutcell(&d, &inp, &SolverParams::default()).unwrap();
    // uniform flow u = 1 is the exact answer
    for (k, v) in out.u.comps[0].data.iter().enumerate() {
        assert!((v - 1.0).abs() < 1e-5, "face {k}: {v}");
    }
    assert!(out.u.comps[1].max_abs() < 1e-5 && out.u.comps[2].max_abs() < 1e-5);
}

#[test]
fn rejects_fractions_outside_unit_interval() {
    let d = desc2(8);
    let (mut alpha, us, chi) = open_box_input(&d);
    alpha.comps[0].data[5] = 1.5;
    let uo = StaggeredField::zeros(&d, Layout::Velocity);
    let inp = CutCellInput {
        u_omega: &uo,
        alpha: &alpha,
        chi_in: &chi,
        u_solid: &us,
    };
    assert!(matches!(
        solve_harmonic_cutcell(&d, &inp, &SolverParams::default()),
        Err(SolverError::Contract(_))
    ));
}

/// Static sphere in a uniform stream; fractions sampled on a 4x4 face lattice
/// directly from the sphere, independent of the solids module.
fn sphere_case(n: usize, cut: bool) -> (f64, f64) {
    let d = desc3(n);
    let h = d.dx;
    let (cx, rad, big_u) = ([0.5, 0.5, 0.5], 0.16, 0.1);
    let sdf = |p: [f64; 3]| ((p[0] - cx[0]).powi(2) + (p[1] - cx[1]).powi(2) + (p[2] - cx[2]).powi(2)).sqrt() - rad;
    let exact = |p: [f64; 3]| -> [f64; 3] {
        let x = [p[0] - cx[0], p[1] - cx[1], p[2] - cx[2]];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let r = r2.sqrt();
        let k = rad.powi(3);
        std::array::from_fn(|a| {
            let e = if a == 0 { 1.0 } else { 0.0 };
            big_u * (e * (1.0 + k / (2.0 * r.powi(3))) - 1.5 * k * x[0] * x[a] / r.powi(5))
        })
    };
    let solid: Vec<bool> = (0..d.num_cells())
        .map(|c| {
            let i = [c % n, (c / n) % n, c / (n * n)];
            sdf(d.cell_center(i)) < 0.0
        })
        .collect();
    let at = |i: [isize; 3]| -> bool {
        if i.iter().any(|&v| v < 0 || v >= n as isize) {
            return false;
        }
        solid[i[0] as usize + n * (i[1] as usize + n * i[2] as usize)]
    };
    let chi_in: Vec<bool> = (0..d.num_cells())
        .map(|c| {
            let i = [(c % n) as isize, ((c / n) % n) as isize, (c / (n * n)) as isize];
            at(i) && (0..3).all(|a| {
                let mut lo = i;
                lo[a] -= 1;
                let mut hi = i;
                hi[a] += 1;
                at(lo) && at(hi)
            })
        })
        .collect();
    let mut alpha = StaggeredField::zeros(&d, Layout::Velocity);
    for a in 0..3 {
        let arr = &mut alpha.comps[a];
        for k in 0..arr.data.len() {
            let idx = arr.multi_index(k);
            let p = arr.position(&d, idx);
            arr.data[k] = if cut {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                let mut inside = 0;
                for s in 0..4 {
                    for t in 0..4 {
                        let mut q = p;
                        q[b] += ((s as f64 + 0.5) / 4.0 - 0.5) * h;
                        q[c] += ((t as f64 + 0.5) / 4.0 - 0.5) * h;
                        if sdf(q) > 0.0 {
                            inside += 1;
                        }
                    }
                }
                inside as f64 / 16.0
            } else {
                let ii = [idx[0] as isize, idx[1] as isize, idx[2] as isize];
                let mut lo = ii;
                lo[a] -= 1;
                if at(ii) || at(lo) {
                    0.0
                } else {
                    1.0
                }
            };
        }
    }
    let uo = StaggeredField::from_fn(&d, Layout::Velocity, |c, _| if c == 0 { big_u } else { 0.0 });
    let mut us = StaggeredField::zeros(&d, Layout::Velocity);
    for a in 0..3 {
        let arr = &mut us.comps[a];
        for k in 0..arr.data.len() {
            let idx = arr.multi_index(k);
            if idx[a] == 0 || idx[a] == n {
                arr.data[k] = exact(arr.position(&d, idx))[a];
            }
        }
    }
    let inp = CutCellInput {
        u_omega: &uo,
        alpha: &alpha,
        chi_in: &chi_in,
        u_solid: &us,
    };
    let out = solve_harmonic_cutcell(&d, &inp, &SolverParams::default()).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for a in 0..3 {
        let arr = &out.u.comps[a];
        for k in 0..arr.data.len() {
            let p = arr.position(&d, arr.multi_index(k));
            if sdf(p) > 2.0 * h {
                let e = exact(p)[a];
                let base = if a == 0 { big_u } else { 0.0 };
                num += (arr.data[k] - e).powi(2);
                den += (e - base).powi(2);
            }
        }
    }
    // fraction-weighted net flux through every non-interior cell
    let ae = effective_alpha(&d, &alpha, &chi_in);
    let mut flux = out.u.clone();
    for a in 0..3 {
        for k in 0..flux.comps[a].data.len() {
            let w = ae.comps[a].data[k];
            flux.comps[a].data[k] = w * out.u.comps[a].data[k] + (1.0 - w) * us.comps[a].data[k];
        }
    }
    let div = divergence(&d, &flux);
    let mut worst: f64 = 0.0;
    for (c, v) in div.data.iter().enumerate() {
        if !chi_in[c] {
            worst = worst.max(v.abs());
        }
    }
    ((num / den).sqrt(), worst * h / big_u)
}

#[test]
fn sphere_potential_flow_cut_cells_beat_voxels() {
    let (cut, flux) = sphere_case(24, true);
    let (vox, _) = sphere_case(24, false);
    assert!(flux < 1e-5, "cut-cell flux residual {flux}");
    assert!(cut < vox, "cut {cut} vox {vox}");
    assert!(cut < 0.05, "cut-cell error {cut}");
}
