use super::{GridDesc, StaggeredArray, StaggeredField};
use crate::Real;

/// Quadratic B-spline weights for the three nodes `base, base+1, base+2`.
///
/// `fx` is the position relative to `base` in cell units and lies in `[0.5, 1.5]`.
/// Returns values, first derivatives and (piecewise-constant) second derivatives,
/// all per unit cell.
#[inline(always)]
pub fn bspline<T: Real>(fx: T) -> ([T; 3], [T; 3], [T; 3]) {
    let half = T::lit(0.5);
    let one = T::one();
    let a = T::lit(1.5) - fx;
    let b = fx - one;
    let c = fx - half;
    (
        [half * a * a, T::lit(0.75) - b * b, half * c * c],
        [-a, T::lit(-2.0) * b, c],
        [one, T::lit(-2.0), one],
    )
}

/// Tensor-product kernel stencil around a position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelWeights<T, const D: usize> {
    /// Index of the first of the three stencil nodes per axis (may be -1 next to a wall).
    pub base: [isize; D],
    pub w: [[T; 3]; D],
    /// Derivatives, units 1/length.
    pub dw: [[T; 3]; D],
    /// Second derivatives, units 1/length^2.
    pub ddw: [[T; 3]; D],
    /// The query position was outside the domain and got clamped.
    pub clamped: bool,
}

/// Quadratic B-spline stencil of `pos` for samples with the given staggering.
pub fn kernel_at<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    pos: &[T; D],
    stagger: [bool; D],
) -> KernelWeights<T, D> {
    let ext = desc.extent();
    let inv = T::one() / desc.dx;
    let mut out = KernelWeights {
        base: [0; D],
        w: [[T::zero(); 3]; D],
        dw: [[T::zero(); 3]; D],
        ddw: [[T::zero(); 3]; D],
        clamped: false,
    };
    for a in 0..D {
        let lo = desc.origin[a];
        let hi = lo + ext[a];
        let mut p = pos[a];
        if !(p >= lo) {
            p = lo;
            out.clamped = true;
        } else if p > hi {
            p = hi;
            out.clamped = true;
        }
        let off = if stagger[a] { T::lit(0.5) } else { T::zero() };
        let size = if stagger[a] { desc.cells[a] } else { desc.cells[a] + 1 } as isize;
        let s = (p - lo) * inv - off;
        let mut base = (s - T::lit(0.5)).floor().to_isize().unwrap_or(0);
        let mut fx = s - T::from_isize(base).unwrap();
        // At an exact knot on the outer wall pick the interval that keeps a single ghost.
        if base + 2 > size {
            base -= 1;
            fx += T::one();
        } else if base < -1 {
            base += 1;
            fx -= T::one();
        }
        let (w, dw, ddw) = bspline(fx);
        out.base[a] = base;
        out.w[a] = w;
        out.dw[a] = dw.map(|v| v * inv);
        out.ddw[a] = ddw.map(|v| v * inv * inv);
    }
    out
}

impl<T: Real, const D: usize> KernelWeights<T, D> {
    /// Folds out-of-range stencil nodes back into the array using linear
    /// extrapolation ghosts (`v[-1] = 2 v[0] - v[1]`), so every node index is valid.
    /// Affine data is reproduced exactly and partition of unity is kept.
    pub fn folded(&self, shape: &[usize; D]) -> Self {
        let mut out = *self;
        let two = T::lit(2.0);
        for a in 0..D {
            let n = shape[a] as isize;
            let fold = |v: [T; 3], low: bool| -> [T; 3] {
                if low {
                    [v[1] + two * v[0], v[2] - v[0], T::zero()]
                } else {
                    [T::zero(), v[0] - v[2], v[1] + two * v[2]]
                }
            };
            if self.base[a] < 0 {
                out.base[a] = 0;
                out.w[a] = fold(self.w[a], true);
                out.dw[a] = fold(self.dw[a], true);
                out.ddw[a] = fold(self.ddw[a], true);
            } else if self.base[a] + 2 >= n {
                out.base[a] = n - 3;
                out.w[a] = fold(self.w[a], false);
                out.dw[a] = fold(self.dw[a], false);
                out.ddw[a] = fold(self.ddw[a], false);
            }
        }
        out
    }

    /// Product weight of stencil offset `t` (each entry in 0..3).
    pub fn weight(&self, t: [usize; D]) -> T {
        (0..D).fold(T::one(), |acc, a| acc * self.w[a][t[a]])
    }

    /// Gradient of the product weight at stencil offset `t`.
    pub fn weight_grad(&self, t: [usize; D]) -> [T; D] {
        std::array::from_fn(|d| {
            (0..D).fold(T::one(), |acc, a| {
                acc * if a == d { self.dw[a][t[a]] } else { self.w[a][t[a]] }
            })
        })
    }
}

/// Value, gradient and Hessian of one interpolated component.
#[derive(Clone, Copy, Debug)]
struct Jet<T, const D: usize> {
    val: T,
    grad: [T; D],
    hess: [[T; D]; D],
}

#[inline(always)]
fn jet_component<T: Real, const D: usize>(
    arr: &StaggeredArray<T, D>,
    k: &KernelWeights<T, D>,
    hessian: bool,
) -> Jet<T, D> {
    let z = T::zero();
    let mut out = Jet {
        val: z,
        grad: [z; D],
        hess: [[z; D]; D],
    };
    let st = arr.strides();
    let mut origin = 0usize;
    for a in 0..D {
        origin += k.base[a] as usize * st[a];
    }
    let d = &arr.data;
    let (w, dw, ddw) = (&k.w, &k.dw, &k.ddw);
    if D == 2 {
        let (mut q00, mut q10, mut q20, mut q01, mut q11, mut q02) = (z, z, z, z, z, z);
        for t1 in 0..3 {
            let row = origin + t1 * st[1];
            let (mut a0, mut a1, mut a2) = (z, z, z);
            for t0 in 0..3 {
                let v = d[row + t0];
                a0 += w[0][t0] * v;
                a1 += dw[0][t0] * v;
                a2 += ddw[0][t0] * v;
            }
            let (wy, dy, ddy) = (w[1][t1], dw[1][t1], ddw[1][t1]);
            q00 += wy * a0;
            q10 += wy * a1;
            q01 += dy * a0;
            if hessian {
                q20 += wy * a2;
                q11 += dy * a1;
                q02 += ddy * a0;
            }
        }
        out.val = q00;
        out.grad[0] = q10;
        out.grad[1] = q01;
        if hessian {
            out.hess[0][0] = q20;
            out.hess[1][1] = q02;
            out.hess[0][1] = q11;
            out.hess[1][0] = q11;
        }
    } else {
        let (mut val, mut g0, mut g1, mut g2) = (z, z, z, z);
        let (mut h00, mut h11, mut h22, mut h01, mut h02, mut h12) = (z, z, z, z, z, z);
        for t2 in 0..3 {
            let (mut q00, mut q10, mut q20, mut q01, mut q11, mut q02) = (z, z, z, z, z, z);
            for t1 in 0..3 {
                let row = origin + t2 * st[2] + t1 * st[1];
                let (mut a0, mut a1, mut a2) = (z, z, z);
                for t0 in 0..3 {
                    let v = d[row + t0];
                    a0 += w[0][t0] * v;
                    a1 += dw[0][t0] * v;
                    a2 += ddw[0][t0] * v;
                }
                let (wy, dy, ddy) = (w[1][t1], dw[1][t1], ddw[1][t1]);
                q00 += wy * a0;
                q10 += wy * a1;
                q01 += dy * a0;
                if hessian {
                    q20 += wy * a2;
                    q11 += dy * a1;
                    q02 += ddy * a0;
                }
            }
            let (wz, dz, ddz) = (w[2][t2], dw[2][t2], ddw[2][t2]);
            val += wz * q00;
            g0 += wz * q10;
            g1 += wz * q01;
            g2 += dz * q00;
            if hessian {
                h00 += wz * q20;
                h11 += wz * q02;
                h22 += ddz * q00;
                h01 += wz * q11;
                h02 += dz * q10;
                h12 += dz * q01;
            }
        }
        out.val = val;
        out.grad[0] = g0;
        out.grad[1] = g1;
        out.grad[2] = g2;
        if hessian {
            let h = [[h00, h01, h02], [h01, h11, h12], [h02, h12, h22]];
            for i in 0..D {
                for j in 0..D {
                    out.hess[i][j] = h[i][j];
                }
            }
        }
    }
    out
}

fn folded_kernel<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    arr: &StaggeredArray<T, D>,
    pos: &[T; D],
) -> KernelWeights<T, D> {
    kernel_at(desc, pos, arr.stagger).folded(&arr.shape)
}

/// Interpolated value of one staggered array.
pub fn sample_array<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    arr: &StaggeredArray<T, D>,
    pos: &[T; D],
) -> T {
    let k = folded_kernel(desc, arr, pos);
    let st = arr.strides();
    let mut acc = T::zero();
    let n = 3usize.pow(D as u32);
    for s in 0..n {
        let mut rem = s;
        let mut idx = 0;
        let mut wt = T::one();
        for a in 0..D {
            let t = rem % 3;
            rem /= 3;
            idx += (k.base[a] as usize + t) * st[a];
            wt *= k.w[a][t];
        }
        acc += wt * arr.data[idx];
    }
    acc
}

/// Interpolated value and gradient of one staggered array.
pub fn sample_array_grad<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    arr: &StaggeredArray<T, D>,
    pos: &[T; D],
) -> (T, [T; D]) {
    let k = folded_kernel(desc, arr, pos);
    let j = jet_component(arr, &k, false);
    (j.val, j.grad)
}

/// Velocity, its gradient `grad[i][j] = du_i/dx_j` and Hessian
/// `hess[i][j][k] = d2u_i/dx_j dx_k` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityJet<T, const D: usize> {
    pub u: [T; D],
    pub grad: [[T; D]; D],
    pub hess: [[[T; D]; D]; D],
    pub clamped: bool,
}

pub fn sample_velocity_jet<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
    pos: &[T; D],
    hessian: bool,
) -> VelocityJet<T, D> {
    let z = T::zero();
    let mut out = VelocityJet {
        u: [z; D],
        grad: [[z; D]; D],
        hess: [[[z; D]; D]; D],
        clamped: false,
    };
    for c in 0..D {
        let arr = &u.comps[c];
        let raw = kernel_at(desc, pos, arr.stagger);
        out.clamped |= raw.clamped;
        let j = jet_component(arr, &raw.folded(&arr.shape), hessian);
        out.u[c] = j.val;
        out.grad[c] = j.grad;
        out.hess[c] = j.hess;
    }
    out
}

pub fn sample_velocity<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
    pos: &[T; D],
) -> [T; D] {
    std::array::from_fn(|c| sample_array(desc, &u.comps[c], pos))
}

pub fn sample_velocity_gradient<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
    pos: &[T; D],
) -> [[T; D]; D] {
    sample_velocity_jet(desc, u, pos, false).grad
}

pub fn sample_velocity_hessian<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
    pos: &[T; D],
) -> [[[T; D]; D]; D] {
    sample_velocity_jet(desc, u, pos, true).hess
}

/// Values and gradients of every vorticity component (1 in 2D, 3 in 3D).
/// Unused trailing slots are zero.
pub fn sample_vorticity<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    omega: &StaggeredField<T, D>,
    pos: &[T; D],
) -> ([T; 3], [[T; D]; 3]) {
    let mut val = [T::zero(); 3];
    let mut grad = [[T::zero(); D]; 3];
    for (c, arr) in omega.comps.iter().enumerate() {
        let k = folded_kernel(desc, arr, pos);
        let j = jet_component(arr, &k, false);
        val[c] = j.val;
        grad[c] = j.grad;
    }
    (val, grad)
}
