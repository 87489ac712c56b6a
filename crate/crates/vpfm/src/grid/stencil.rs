use super::{for_each_index, GridDesc, Layout, StaggeredArray, StaggeredField};
use crate::Real;

/// Ghost treatment for half-staggered axes in [`laplacian_edge`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ghost {
    /// Samples beyond the wall are zero.
    Zero,
    /// Samples beyond the wall mirror the first interior sample.
    Mirror,
}

/// Staggered curl of a face velocity, stored on edges (3D) or nodes (2D).
///
/// Entries on the domain boundary are left at zero; callers that need wall
/// vorticity set it afterwards.
pub fn curl_face_to_vort<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
) -> StaggeredField<T, D> {
    assert_eq!(u.layout, Layout::Velocity, "curl expects a velocity field");
    u.check(desc).expect("velocity shape");
    let inv = T::one() / desc.dx;
    let mut w = StaggeredField::zeros(desc, Layout::Vorticity);
    if D == 2 {
        let (ua, va) = (&u.comps[0], &u.comps[1]);
        let out = &mut w.comps[0];
        let [nx, ny] = [desc.cells[0], desc.cells[1]];
        for j in 1..ny {
            for i in 1..nx {
                let dvdx = va.data[idx2(va, i, j)] - va.data[idx2(va, i - 1, j)];
                let dudy = ua.data[idx2(ua, i, j)] - ua.data[idx2(ua, i, j - 1)];
                let k = idx2(out, i, j);
                out.data[k] = (dvdx - dudy) * inv;
            }
        }
    } else {
        // omega_a = d u_c / d x_b - d u_b / d x_c with (a, b, c) cyclic
        for a in 0..3 {
            let b = (a + 1) % 3;
            let c = (a + 2) % 3;
            let (ub, uc) = (&u.comps[b], &u.comps[c]);
            let sb = ub.strides();
            let sc = uc.strides();
            let out = &mut w.comps[a];
            let shape = out.shape;
            let probe = StaggeredArray::<T, D> {
                shape,
                stagger: out.stagger,
                data: Vec::new(),
            };
            let data = &mut out.data;
            for_each_index(shape, |k, i| {
                if probe.on_boundary(i) {
                    return;
                }
                let kc = flat(&uc.shape, &i);
                let kb = flat(&ub.shape, &i);
                let duc_db = uc.data[kc] - uc.data[kc - sc[b]];
                let dub_dc = ub.data[kb] - ub.data[kb - sb[c]];
                data[k] = (duc_db - dub_dc) * inv;
            });
        }
    }
    w
}

/// Staggered curl of a vorticity-layout potential, stored on faces.
/// The result is discretely divergence free.
pub fn curl_vort_to_face<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    psi: &StaggeredField<T, D>,
) -> StaggeredField<T, D> {
    assert_eq!(psi.layout, Layout::Vorticity, "curl expects a vorticity-layout field");
    psi.check(desc).expect("potential shape");
    let inv = T::one() / desc.dx;
    let mut u = StaggeredField::zeros(desc, Layout::Velocity);
    if D == 2 {
        let p = &psi.comps[0];
        let sp = p.strides();
        for c in 0..2 {
            let out = &mut u.comps[c];
            let shape = out.shape;
            let data = &mut out.data;
            for_each_index(shape, |k, i| {
                let kp = flat(&p.shape, &i);
                data[k] = if c == 0 {
                    (p.data[kp + sp[1]] - p.data[kp]) * inv
                } else {
                    -(p.data[kp + sp[0]] - p.data[kp]) * inv
                };
            });
        }
    } else {
        // u_a = d psi_c / d x_b - d psi_b / d x_c with (a, b, c) cyclic
        for a in 0..3 {
            let b = (a + 1) % 3;
            let c = (a + 2) % 3;
            let (pb, pc) = (&psi.comps[b], &psi.comps[c]);
            let sb = pb.strides();
            let sc = pc.strides();
            let out = &mut u.comps[a];
            let shape = out.shape;
            let data = &mut out.data;
            for_each_index(shape, |k, i| {
                let kc = flat(&pc.shape, &i);
                let kb = flat(&pb.shape, &i);
                data[k] = ((pc.data[kc + sc[b]] - pc.data[kc]) - (pb.data[kb + sb[c]] - pb.data[kb])) * inv;
            });
        }
    }
    u
}

/// Cell-centered divergence of a face velocity.
pub fn divergence<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
) -> StaggeredArray<T, D> {
    assert_eq!(u.layout, Layout::Velocity);
    let inv = T::one() / desc.dx;
    let mut out = StaggeredArray::zeros(desc, [true; D]);
    let shape = out.shape;
    let data = &mut out.data;
    for_each_index(shape, |k, i| {
        let mut s = T::zero();
        for a in 0..D {
            let arr = &u.comps[a];
            let kf = flat(&arr.shape, &i);
            s += arr.data[kf + arr.strides()[a]] - arr.data[kf];
        }
        data[k] = s * inv;
    });
    out
}

/// 5-point (2D) or 7-point (3D) Laplacian of one component of a vorticity-layout
/// field. Boundary-plane entries return zero; along half-staggered axes the
/// neighbor beyond the wall follows `ghost`.
pub fn laplacian_edge<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    field: &StaggeredField<T, D>,
    comp: usize,
    ghost: Ghost,
) -> StaggeredArray<T, D> {
    let arr = &field.comps[comp];
    let inv2 = T::one() / (desc.dx * desc.dx);
    let mut out = StaggeredArray {
        shape: arr.shape,
        stagger: arr.stagger,
        data: vec![T::zero(); arr.data.len()],
    };
    let st = arr.strides();
    let shape = arr.shape;
    let stagger = arr.stagger;
    let two = T::lit(2.0);
    let data = &mut out.data;
    for_each_index(shape, |k, i| {
        if arr.on_boundary(i) {
            return;
        }
        let c = arr.data[k];
        let mut s = T::zero();
        for a in 0..D {
            let lo = if i[a] > 0 {
                arr.data[k - st[a]]
            } else {
                debug_assert!(stagger[a]);
                match ghost {
                    Ghost::Zero => T::zero(),
                    Ghost::Mirror => c,
                }
            };
            let hi = if i[a] + 1 < shape[a] {
                arr.data[k + st[a]]
            } else {
                match ghost {
                    Ghost::Zero => T::zero(),
                    Ghost::Mirror => c,
                }
            };
            s += lo + hi - two * c;
        }
        data[k] = s * inv2;
    });
    out
}

#[inline(always)]
fn idx2<T: Real, const D: usize>(a: &StaggeredArray<T, D>, i: usize, j: usize) -> usize {
    i + a.shape[0] * j
}

/// Flat index of `i` in an array of `shape` (x fastest).
#[inline(always)]
pub(crate) fn flat<const D: usize>(shape: &[usize; D], i: &[usize; D]) -> usize {
    let mut idx = 0;
    for a in (0..D).rev() {
        idx = idx * shape[a] + i[a];
    }
    idx
}
