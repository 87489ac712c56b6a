//! Small fixed-size matrix helpers.

use crate::Real;

pub type Mat<T, const D: usize> = [[T; D]; D];
/// `g[i][j][l] = d F_ij / d x_l`.
pub type Tensor3<T, const D: usize> = [[[T; D]; D]; D];

pub fn identity<T: Real, const D: usize>() -> Mat<T, D> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { T::one() } else { T::zero() }))
}

pub fn zero3<T: Real, const D: usize>() -> Tensor3<T, D> {
    [[[T::zero(); D]; D]; D]
}

pub fn mat_mul<T: Real, const D: usize>(a: &Mat<T, D>, b: &Mat<T, D>) -> Mat<T, D> {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..D).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn mat_vec<T: Real, const D: usize>(a: &Mat<T, D>, v: &[T; D]) -> [T; D] {
    std::array::from_fn(|i| (0..D).map(|k| a[i][k] * v[k]).sum())
}

pub fn det<T: Real, const D: usize>(a: &Mat<T, D>) -> T {
    match D {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => unreachable!("dimension must be 2 or 3"),
    }
}

/// Frobenius norm of `a - I`.
pub fn dist_to_identity<T: Real, const D: usize>(a: &Mat<T, D>) -> T {
    let mut s = T::zero();
    for i in 0..D {
        for j in 0..D {
            let e = a[i][j] - if i == j { T::one() } else { T::zero() };
            s += e * e;
        }
    }
    s.sqrt()
}

pub fn is_finite_mat<T: Real, const D: usize>(a: &Mat<T, D>) -> bool {
    a.iter().flatten().all(|v| v.is_finite())
}
