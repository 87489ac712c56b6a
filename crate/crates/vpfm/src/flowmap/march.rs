use super::linalg::{det, is_finite_mat, Mat, Tensor3};
use super::VortexParticle;
use crate::grid::{sample_velocity_jet, GridDesc, StaggeredField};
use crate::Real;

/// Why a particle's short map was abandoned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instability {
    NonFinite,
    /// `det F <= 0`: the map folded over.
    Inverted,
}

#[derive(Clone, Copy)]
struct MapState<T, const D: usize> {
    x: [T; D],
    f: Mat<T, D>,
    t: Mat<T, D>,
    g: Tensor3<T, D>,
}

fn rate<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
    s: &MapState<T, D>,
    hessian: bool,
) -> MapState<T, D> {
    let jet = sample_velocity_jet(desc, u, &s.x, hessian);
    let gu = &jet.grad;
    let f: Mat<T, D> = std::array::from_fn(|i| std::array::from_fn(|j| (0..D).map(|k| gu[i][k] * s.f[k][j]).sum()));
    let t: Mat<T, D> = std::array::from_fn(|i| std::array::from_fn(|j| -(0..D).map(|k| s.t[i][k] * gu[k][j]).sum::<T>()));
    let mut g = [[[T::zero(); D]; D]; D];
    if hessian {
        for i in 0..D {
            for j in 0..D {
                for l in 0..D {
                    let mut acc = T::zero();
                    for k in 0..D {
                        acc += gu[i][k] * s.g[k][j][l] - s.g[i][j][k] * gu[k][l] + jet.hess[i][k][l] * s.f[k][j];
                    }
                    g[i][j][l] = acc;
                }
            }
        }
    }
    MapState { x: jet.u, f, t, g }
}

fn advance<T: Real, const D: usize>(s: &MapState<T, D>, k: &MapState<T, D>, h: T) -> MapState<T, D> {
    let mut o = *s;
    for i in 0..D {
        o.x[i] += h * k.x[i];
        for j in 0..D {
            o.f[i][j] += h * k.f[i][j];
            o.t[i][j] += h * k.t[i][j];
            for l in 0..D {
                o.g[i][j][l] += h * k.g[i][j][l];
            }
        }
    }
    o
}

/// One classical RK4 step of position, `F_bc`, `T_bc` and (optionally) the
/// Hessian `grad F_bc`, all driven by the same velocity samples per stage.
///
/// On failure the particle is left untouched.
pub fn rk4_march<T: Real, const D: usize>(
    p: &mut VortexParticle<T, D>,
    desc: &GridDesc<T, D>,
    u_mid: &StaggeredField<T, D>,
    dt: T,
    hessian: bool,
) -> Result<(), Instability> {
    let s0 = MapState {
        x: p.pos,
        f: p.f_bc,
        t: p.t_bc,
        g: p.grad_f_bc,
    };
    let half = dt * T::lit(0.5);
    let k1 = rate(desc, u_mid, &s0, hessian);
    let k2 = rate(desc, u_mid, &advance(&s0, &k1, half), hessian);
    let k3 = rate(desc, u_mid, &advance(&s0, &k2, half), hessian);
    let k4 = rate(desc, u_mid, &advance(&s0, &k3, dt), hessian);
    let sixth = dt / T::lit(6.0);
    let mut s = s0;
    for (k, w) in [(&k1, T::one()), (&k2, T::lit(2.0)), (&k3, T::lit(2.0)), (&k4, T::one())] {
        s = advance(&s, k, sixth * w);
    }
    let finite = s.x.iter().all(|v| v.is_finite())
        && is_finite_mat(&s.f)
        && is_finite_mat(&s.t)
        && s.g.iter().flatten().flatten().all(|v| v.is_finite());
    if !finite {
        return Err(Instability::NonFinite);
    }
    if det(&s.f) <= T::zero() {
        return Err(Instability::Inverted);
    }
    // keep particles inside the box; the kernel would clamp them anyway
    let ext = desc.extent();
    for a in 0..D {
        s.x[a] = s.x[a].max(desc.origin[a]).min(desc.origin[a] + ext[a]);
    }
    p.pos = s.x;
    p.f_bc = s.f;
    p.t_bc = s.t;
    p.grad_f_bc = s.g;
    Ok(())
}
