//! Vortex filaments smeared onto the grid with the poly6 kernel
//! `K(r) = 315 / (64 pi s^3) (1 - r^2 / s^2)^3`, `r < s`.

use std::f64::consts::PI;
use vpfm::grid::{GridDesc, Layout, StaggeredField};

/// Closed polyline carrying `circulation`, mollified over radius `support`.
#[derive(Clone, Debug, PartialEq)]
pub struct Filament {
    pub points: Vec<[f64; 3]>,
    pub circulation: f64,
    pub support: f64,
}

pub fn poly6(r2: f64, s: f64) -> f64 {
    let q = 1.0 - r2 / (s * s);
    if q <= 0.0 {
        return 0.0;
    }
    315.0 / (64.0 * PI * s * s * s) * q * q * q
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Orthonormal pair spanning the plane normal to `n` (unit).
fn plane_basis(n: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = cross(n, helper);
    let l = norm(e1);
    let e1 = e1.map(|v| v / l);
    (e1, cross(n, e1))
}

impl Filament {
    /// Circle of `radius` about `center`, oriented by the right-hand rule about
    /// `normal`.
    pub fn ring(center: [f64; 3], normal: [f64; 3], radius: f64, circulation: f64, support: f64, segments: usize) -> Self {
        let l = norm(normal);
        let n = normal.map(|v| v / l);
        let (e1, e2) = plane_basis(n);
        let points = (0..segments)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / segments as f64;
                let (c, s) = (t.cos(), t.sin());
                std::array::from_fn(|a| center[a] + radius * (c * e1[a] + s * e2[a]))
            })
            .collect();
        Self {
            points,
            circulation,
            support,
        }
    }

    pub fn trefoil(center: [f64; 3], scale: f64, circulation: f64, support: f64, segments: usize) -> Self {
        let points = (0..segments)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / segments as f64;
                let p = [
                    t.sin() + 2.0 * (2.0 * t).sin(),
                    t.cos() - 2.0 * (2.0 * t).cos(),
                    -(3.0 * t).sin(),
                ];
                std::array::from_fn(|a| center[a] + scale * p[a])
            })
            .collect();
        Self {
            points,
            circulation,
            support,
        }
    }

    /// Axis-aligned box holding every point of the smeared filament.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a] - self.support);
                hi[a] = hi[a].max(p[a] + self.support);
            }
        }
        (lo, hi)
    }
}

/// Segments needed so that each is at most a quarter of the support long.
pub fn default_segments(curve_length: f64, support: f64) -> usize {
    ((4.0 * curve_length / support).ceil() as usize).max(16)
}

/// Adds `circulation * sum_k K(|x - m_k|) (p_{k+1} - p_k)` (midpoint rule over
/// segments) to every vorticity sample of `omega`.
pub fn mollify_into(desc: &GridDesc<f64, 3>, omega: &mut StaggeredField<f64, 3>, filament: &Filament) {
    assert_eq!(omega.layout, Layout::Vorticity);
    let s = filament.support;
    let n = filament.points.len();
    for k in 0..n {
        let p0 = filament.points[k];
        let p1 = filament.points[(k + 1) % n];
        let seg = sub(p1, p0);
        let mid: [f64; 3] = std::array::from_fn(|a| 0.5 * (p0[a] + p1[a]));
        for (c, arr) in omega.comps.iter_mut().enumerate() {
            let w = filament.circulation * seg[c];
            if w == 0.0 {
                continue;
            }
            let shift: [f64; 3] = std::array::from_fn(|a| if arr.stagger[a] { 0.5 } else { 0.0 });
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            let mut empty = false;
            for a in 0..3 {
                let to_idx = |x: f64| (x - desc.origin[a]) / desc.dx - shift[a];
                let l = to_idx(mid[a] - s).ceil().max(0.0);
                let h = to_idx(mid[a] + s).floor().min((arr.shape[a] - 1) as f64);
                if h < l {
                    empty = true;
                    break;
                }
                lo[a] = l as usize;
                hi[a] = h as usize;
            }
            if empty {
                continue;
            }
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for l in lo[2]..=hi[2] {
                        let x = arr.position(desc, [i, j, l]);
                        let d = sub(x, mid);
                        let kv = poly6(d[0] * d[0] + d[1] * d[1] + d[2] * d[2], s);
                        if kv > 0.0 {
                            let idx = arr.index([i, j, l]);
                            arr.data[idx] += w * kv;
                        }
                    }
                }
            }
        }
    }
}

pub fn mollify(desc: &GridDesc<f64, 3>, filaments: &[Filament]) -> StaggeredField<f64, 3> {
    let mut omega = StaggeredField::zeros(desc, Layout::Vorticity);
    for f in filaments {
        mollify_into(desc, &mut omega, f);
    }
    omega
}
