//! Particle flow maps: RK4 marching of positions, Jacobians and the Jacobian
//! gradient, two-segment (long / short) bookkeeping, and push-forward of
//! vorticity and its gradient.
//!
//! Vorticity is stored as a 3-vector in both dimensions; planar runs use only
//! slot 0 (the out-of-plane component).

pub mod linalg;
mod march;

pub use march::{rk4_march, Instability};

use crate::Real;
use linalg::{identity, mat_mul, zero3, Mat, Tensor3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VortexParticle<T, const D: usize> {
    pub pos: [T; D],
    /// Vorticity at the start of the long segment.
    pub omega_a: [T; 3],
    /// Vorticity at the start of the short segment.
    pub omega_b: [T; 3],
    /// `grad_omega_b[c][l] = d omega_b,c / d x_l` at the start of the short segment.
    pub grad_omega_b: [[T; D]; 3],
    pub f_ab: Mat<T, D>,
    pub t_ab: Mat<T, D>,
    pub f_bc: Mat<T, D>,
    pub t_bc: Mat<T, D>,
    /// `grad_f_bc[i][j][l] = d (F_bc)_ij / d x_l` in current coordinates.
    pub grad_f_bc: Tensor3<T, D>,
}

impl<T: Real, const D: usize> VortexParticle<T, D> {
    pub fn new(pos: [T; D]) -> Self {
        Self {
            pos,
            omega_a: [T::zero(); 3],
            omega_b: [T::zero(); 3],
            grad_omega_b: [[T::zero(); D]; 3],
            f_ab: identity(),
            t_ab: identity(),
            f_bc: identity(),
            t_bc: identity(),
            grad_f_bc: zero3(),
        }
    }

    /// Starts a new long segment: every map is reset to the identity.
    pub fn reset_long(&mut self) {
        self.f_ab = identity();
        self.t_ab = identity();
        self.reset_short();
    }

    /// Folds the finished short segment into the prefix and restarts it.
    pub fn fold_short(&mut self) {
        let (f_ac, t_ac) = connect_jacobians(self);
        self.f_ab = f_ac;
        self.t_ab = t_ac;
        self.reset_short();
    }

    fn reset_short(&mut self) {
        self.f_bc = identity();
        self.t_bc = identity();
        self.grad_f_bc = zero3();
    }
}

/// Long / short reinitialization counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentClock {
    pub n_long: usize,
    pub n_short: usize,
    /// Steps taken so far.
    pub step: usize,
}

impl SegmentClock {
    /// `None` unless `1 <= n_short <= n_long`.
    pub fn new(n_long: usize, n_short: usize) -> Option<Self> {
        (n_short >= 1 && n_short <= n_long).then_some(Self {
            n_long,
            n_short,
            step: 0,
        })
    }

    pub fn step_in_long(&self) -> usize {
        self.step % self.n_long
    }

    pub fn step_in_short(&self) -> usize {
        self.step % self.n_short
    }

    pub fn long_due(&self) -> bool {
        self.step_in_long() == 0
    }

    /// A long reinitialization always restarts the short segment too.
    pub fn short_due(&self) -> bool {
        self.step_in_short() == 0 || self.long_due()
    }

    pub fn advance(&mut self) {
        self.step += 1;
    }
}

/// Whole-segment maps: `F_ac = F_bc F_ab`, `T_ac = T_ab T_bc`.
pub fn connect_jacobians<T: Real, const D: usize>(p: &VortexParticle<T, D>) -> (Mat<T, D>, Mat<T, D>) {
    (mat_mul(&p.f_bc, &p.f_ab), mat_mul(&p.t_ab, &p.t_bc))
}

/// Current vorticity: stretched by `F_ac` in 3D, carried unchanged in 2D.
pub fn push_forward_vorticity<T: Real, const D: usize>(p: &VortexParticle<T, D>, f_ac: &Mat<T, D>) -> [T; 3] {
    if D == 2 {
        return p.omega_a;
    }
    std::array::from_fn(|i| (0..D).map(|k| f_ac[i][k] * p.omega_a[k]).sum())
}

/// Current vorticity gradient from the short segment.
///
/// 3D: `F_bc grad(omega_b) T_bc + grad(F_bc) omega_b` (the second term only
/// with `hessian`); 2D: `T_bc^T grad(omega_b)`.
pub fn push_forward_gradient<T: Real, const D: usize>(p: &VortexParticle<T, D>, hessian: bool) -> [[T; D]; 3] {
    let mut out = [[T::zero(); D]; 3];
    if D == 2 {
        for l in 0..D {
            out[0][l] = (0..D).map(|k| p.grad_omega_b[0][k] * p.t_bc[k][l]).sum();
        }
        return out;
    }
    for i in 0..D {
        for l in 0..D {
            let mut acc = T::zero();
            for j in 0..D {
                for k in 0..D {
                    acc += p.f_bc[i][j] * p.grad_omega_b[j][k] * p.t_bc[k][l];
                }
            }
            if hessian {
                for k in 0..D {
                    acc += p.grad_f_bc[i][k][l] * p.omega_b[k];
                }
            }
            out[i][l] = acc;
        }
    }
    out
}
