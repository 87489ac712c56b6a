use crate::dynamics::{DynamicsError, SimConfig, SimState};
use crate::grid::{for_each_index, GridDesc, Layout, StaggeredArray, StaggeredField};
use std::f64::consts::PI;

/// Taylor-Green run parameters; the defaults are the order-study settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaylorGreenSetup {
    pub nu: f64,
    pub cfl: f64,
    pub n_long: usize,
    pub t_end: f64,
}

impl Default for TaylorGreenSetup {
    fn default() -> Self {
        Self {
            nu: 0.005,
            cfl: 0.4,
            n_long: 20,
            t_end: 1.0,
        }
    }
}

/// Exact vorticity `2 sin x sin y exp(-2 nu t)` on `[0, 2 pi]^2`
/// (streamfunction `sin x sin y`).
pub fn taylor_green_omega(desc: &GridDesc<f64, 2>, nu: f64, t: f64) -> StaggeredField<f64, 2> {
    let decay = (-2.0 * nu * t).exp();
    StaggeredField::from_fn(desc, Layout::Vorticity, |_, x| 2.0 * x[0].sin() * x[1].sin() * decay)
}

pub fn taylor_green_config(n: usize, setup: &TaylorGreenSetup) -> SimConfig<f64, 2> {
    let desc = GridDesc::new([n, n], 2.0 * PI / n as f64, [0.0, 0.0]).expect("valid grid");
    let mut cfg = SimConfig::new(desc);
    cfg.nu = setup.nu;
    cfg.cfl = setup.cfl;
    cfg.n_long = setup.n_long;
    cfg.max_time = Some(setup.t_end);
    cfg.solver.tol = 1e-10;
    cfg.scene_name = "taylor_green".into();
    cfg
}

pub fn taylor_green_state(cfg: SimConfig<f64, 2>) -> Result<SimState<f64, 2>, DynamicsError> {
    let omega = taylor_green_omega(&cfg.grid, cfg.nu, 0.0);
    SimState::new(cfg, omega)
}

/// RMS and max vorticity error against the exact solution at the state's time.
pub fn taylor_green_error(state: &SimState<f64, 2>) -> (f64, f64) {
    let exact = taylor_green_omega(state.desc(), state.config.nu, state.time);
    interior_error(&state.omega.comps[0], &exact.comps[0])
}

/// RMS and max of `a - b` over samples off the domain boundary.
pub fn interior_error(a: &StaggeredArray<f64, 2>, b: &StaggeredArray<f64, 2>) -> (f64, f64) {
    assert_eq!(a.shape, b.shape);
    let (mut sum, mut max, mut count) = (0.0, 0.0f64, 0usize);
    for_each_index(a.shape, |k, i| {
        if a.on_boundary(i) {
            return;
        }
        let e = (a.data[k] - b.data[k]).abs();
        sum += e * e;
        max = max.max(e);
        count += 1;
    });
    if count == 0 {
        return (0.0, 0.0);
    }
    ((sum / count as f64).sqrt(), max)
}

/// Runs the Taylor-Green vortex at `n x n` to `setup.t_end`; returns (L2, Linf).
pub fn run_taylor_green(n: usize, setup: &TaylorGreenSetup) -> Result<(f64, f64), DynamicsError> {
    let mut state = taylor_green_state(taylor_green_config(n, setup))?;
    state.run()?;
    Ok(taylor_green_error(&state))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive rows.
    pub order_l2: Vec<f64>,
    pub order_linf: Vec<f64>,
}

impl ConvergenceTable {
    /// Observed L2 order between two listed resolutions.
    pub fn order_between(&self, coarse: usize, fine: usize) -> Option<f64> {
        let a = self.rows.iter().find(|r| r.n == coarse)?;
        let b = self.rows.iter().find(|r| r.n == fine)?;
        Some(observed_order(a.h, a.l2, b.h, b.l2))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,h,l2,linf,order_l2,order_linf\n");
        for (i, r) in self.rows.iter().enumerate() {
            let (o2, oi) = if i == 0 {
                (String::new(), String::new())
            } else {
                (format!("{:.4}", self.order_l2[i - 1]), format!("{:.4}", self.order_linf[i - 1]))
            };
            s.push_str(&format!("{},{:.6e},{:.6e},{:.6e},{o2},{oi}\n", r.n, r.h, r.l2, r.linf));
        }
        s
    }
}

fn observed_order(h0: f64, e0: f64, h1: f64, e1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// Pairwise observed orders of consecutive rows (L2, Linf).
pub fn observed_orders(rows: &[ConvergenceRow]) -> (Vec<f64>, Vec<f64>) {
    rows.windows(2)
        .map(|w| {
            (
                observed_order(w[0].h, w[0].l2, w[1].h, w[1].l2),
                observed_order(w[0].h, w[0].linf, w[1].h, w[1].linf),
            )
        })
        .unzip()
}

/// Error table over `resolutions` of a domain of length `length`; `measure(n)`
/// returns the (L2, Linf) error at resolution `n`.
pub fn run_convergence<E>(
    resolutions: &[usize],
    length: f64,
    mut measure: impl FnMut(usize) -> Result<(f64, f64), E>,
) -> Result<ConvergenceTable, E> {
    let mut rows = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let (l2, linf) = measure(n)?;
        rows.push(ConvergenceRow {
            n,
            h: length / n as f64,
            l2,
            linf,
        });
    }
    let (order_l2, order_linf) = observed_orders(&rows);
    Ok(ConvergenceTable {
        rows,
        order_l2,
        order_linf,
    })
}
