//! Analytic solids: signed-distance shapes on rigid pose tracks, voxelized
//! into cell masks, sampled face fractions and solid velocities, plus the
//! one-face-deep penalization band.
//!
//! Shapes live in 3D local coordinates. Planar grids embed points as
//! `(x, y, 0)`, ignore the local z extent of every shape and only honour the
//! z-rotation of a pose.

use crate::grid::{curl_face_to_vort, for_each_index, GridDesc, Layout, StaggeredField};
use crate::Real;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeKind<T> {
    Sphere { radius: T },
    /// Axis-aligned box in local coordinates.
    Box { half_extents: [T; 3] },
    /// Capped cylinder along the local z axis.
    Cylinder { radius: T, half_length: T },
    /// Circle in the local xy plane, infinite along local z.
    Disk { radius: T },
    /// Thin box; `half_extents[0]` is the half thickness.
    Plate { half_extents: [T; 3] },
    /// Solid where `normal . x_local < 0`.
    HalfSpace { normal: [T; 3] },
}

/// Rigid transform `x_world = R(q) x_local + translation`, `q = [w, x, y, z]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose<T> {
    pub translation: [T; 3],
    pub rotation: [T; 4],
}

fn qmul<T: Real>(a: [T; 4], b: [T; 4]) -> [T; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn qrot<T: Real>(q: [T; 4], v: [T; 3]) -> [T; 3] {
    let p = qmul(qmul(q, [T::zero(), v[0], v[1], v[2]]), [q[0], -q[1], -q[2], -q[3]]);
    [p[1], p[2], p[3]]
}

fn normalize4<T: Real>(q: [T; 4]) -> [T; 4] {
    let n = q.iter().map(|v| *v * *v).sum::<T>().sqrt();
    q.map(|v| v / n)
}

impl<T: Real> Pose<T> {
    pub fn identity() -> Self {
        Self::translation([T::zero(); 3])
    }

    pub fn translation(t: [T; 3]) -> Self {
        Self {
            translation: t,
            rotation: [T::one(), T::zero(), T::zero(), T::zero()],
        }
    }

    /// Rotation by `angle` (radians) about the unit `axis`, then translation.
    pub fn from_axis_angle(t: [T; 3], axis: [T; 3], angle: T) -> Self {
        let n = axis.iter().map(|v| *v * *v).sum::<T>().sqrt();
        let h = angle * T::lit(0.5);
        let s = h.sin() / n;
        Self {
            translation: t,
            rotation: [h.cos(), axis[0] * s, axis[1] * s, axis[2] * s],
        }
    }

    pub fn apply(&self, x: [T; 3]) -> [T; 3] {
        let r = qrot(self.rotation, x);
        std::array::from_fn(|a| r[a] + self.translation[a])
    }

    pub fn inverse_apply(&self, x: [T; 3]) -> [T; 3] {
        let d = std::array::from_fn(|a| x[a] - self.translation[a]);
        let q = self.rotation;
        qrot([q[0], -q[1], -q[2], -q[3]], d)
    }

    /// Linear blend of translations, spherical blend of rotations.
    pub fn interpolate(&self, other: &Self, s: T) -> Self {
        let translation = std::array::from_fn(|a| self.translation[a] + s * (other.translation[a] - self.translation[a]));
        let (a, mut b) = (normalize4(self.rotation), normalize4(other.rotation));
        let mut cos = (0..4).map(|i| a[i] * b[i]).sum::<T>();
        if cos < T::zero() {
            b = b.map(|v| -v);
            cos = -cos;
        }
        let rotation = if cos > T::lit(0.9995) {
            normalize4(std::array::from_fn(|i| a[i] + s * (b[i] - a[i])))
        } else {
            let th = cos.min(T::one()).acos();
            let (wa, wb) = (((T::one() - s) * th).sin() / th.sin(), (s * th).sin() / th.sin());
            std::array::from_fn(|i| wa * a[i] + wb * b[i])
        };
        Self { translation, rotation }
    }
}

/// Time-keyed poses; constant before the first and after the last key.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseTrack<T> {
    pub keys: Vec<(T, Pose<T>)>,
}

impl<T: Real> PoseTrack<T> {
    pub fn fixed(p: Pose<T>) -> Self {
        Self {
            keys: vec![(T::zero(), p)],
        }
    }

    /// Keys must be sorted by time; an empty track is the identity.
    pub fn at(&self, t: T) -> Pose<T> {
        match self.keys.as_slice() {
            [] => Pose::identity(),
            [(_, p)] => *p,
            keys => {
                if t <= keys[0].0 {
                    return keys[0].1;
                }
                for w in keys.windows(2) {
                    let ((t0, p0), (t1, p1)) = (&w[0], &w[1]);
                    if t <= *t1 {
                        let s = if *t1 > *t0 { (t - *t0) / (*t1 - *t0) } else { T::one() };
                        return p0.interpolate(p1, s);
                    }
                }
                keys[keys.len() - 1].1
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolidShape<T> {
    pub kind: ShapeKind<T>,
    pub track: PoseTrack<T>,
}

fn norm3<T: Real>(v: [T; 3]) -> T {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn box_sdf<T: Real>(p: [T; 3], b: [T; 3], planar: bool) -> T {
    let n = if planar { 2 } else { 3 };
    let q: Vec<T> = (0..n).map(|a| p[a].abs() - b[a]).collect();
    let outside = q.iter().map(|v| v.max(T::zero()).powi(2)).sum::<T>().sqrt();
    let inside = q.iter().fold(T::neg_infinity(), |m, v| m.max(*v)).min(T::zero());
    outside + inside
}

impl<T: Real> SolidShape<T> {
    pub fn fixed(kind: ShapeKind<T>, pose: Pose<T>) -> Self {
        Self {
            kind,
            track: PoseTrack::fixed(pose),
        }
    }

    /// Signed distance in local coordinates.
    pub fn local_sdf(&self, p: [T; 3], planar: bool) -> T {
        match self.kind {
            ShapeKind::Sphere { radius } => {
                if planar {
                    p[0].hypot(p[1]) - radius
                } else {
                    norm3(p) - radius
                }
            }
            ShapeKind::Box { half_extents } | ShapeKind::Plate { half_extents } => box_sdf(p, half_extents, planar),
            ShapeKind::Disk { radius } => p[0].hypot(p[1]) - radius,
            ShapeKind::Cylinder { radius, half_length } => {
                let dr = p[0].hypot(p[1]) - radius;
                if planar {
                    return dr;
                }
                let dz = p[2].abs() - half_length;
                dr.max(T::zero()).hypot(dz.max(T::zero())) + dr.max(dz).min(T::zero())
            }
            ShapeKind::HalfSpace { normal } => {
                let n = if planar { [normal[0], normal[1], T::zero()] } else { normal };
                (n[0] * p[0] + n[1] * p[1] + n[2] * p[2]) / norm3(n)
            }
        }
    }

    pub fn sdf(&self, x: [T; 3], t: T, planar: bool) -> T {
        self.local_sdf(self.track.at(t).inverse_apply(x), planar)
    }

    /// Velocity of the material point at `x`, by differencing the poses at
    /// `t - dt` and `t`.
    pub fn velocity(&self, x: [T; 3], t: T, dt: T) -> [T; 3] {
        if dt <= T::zero() {
            return [T::zero(); 3];
        }
        let local = self.track.at(t).inverse_apply(x);
        let prev = self.track.at(t - dt).apply(local);
        std::array::from_fn(|a| (x[a] - prev[a]) / dt)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SolidScene<T> {
    pub shapes: Vec<SolidShape<T>>,
}

fn embed<T: Real, const D: usize>(p: [T; D]) -> [T; 3] {
    std::array::from_fn(|a| if a < D { p[a] } else { T::zero() })
}

impl<T: Real> SolidScene<T> {
    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    /// Union of all shapes (minimum distance); `+inf` for an empty scene.
    pub fn sdf<const D: usize>(&self, p: [T; D], t: T) -> T {
        let x = embed(p);
        self.shapes
            .iter()
            .map(|s| s.sdf(x, t, D == 2))
            .fold(T::infinity(), |m, v| m.min(v))
    }

    /// Velocity of the shape nearest to (or containing) `p`.
    pub fn velocity<const D: usize>(&self, p: [T; D], t: T, dt: T) -> [T; D] {
        let x = embed(p);
        let best = self
            .shapes
            .iter()
            .map(|s| (s.sdf(x, t, D == 2), s))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        match best {
            Some((_, s)) => {
                let v = s.velocity(x, t, dt);
                std::array::from_fn(|a| v[a])
            }
            None => [T::zero(); D],
        }
    }

    /// Whether any shape moves.
    pub fn is_dynamic(&self) -> bool {
        self.shapes.iter().any(|s| s.track.keys.len() > 1)
    }
}

/// Fluid fraction of the face centred at `center` with normal `axis`:
/// share of an `n x n` lattice (3D) or `n` points (2D) where `sdf > 0`.
pub fn face_fraction<T: Real, const D: usize>(
    sdf: impl Fn([T; D]) -> T,
    center: [T; D],
    axis: usize,
    dx: T,
    samples_per_axis: usize,
) -> T {
    let n = samples_per_axis.max(1);
    let tang: Vec<usize> = (0..D).filter(|&b| b != axis).collect();
    let off = |s: usize| (T::from_count(s) + T::lit(0.5)) / T::from_count(n) - T::lit(0.5);
    let mut fluid = 0usize;
    let total = n.pow(tang.len() as u32);
    for s in 0..total {
        let mut q = center;
        let mut rem = s;
        for &b in &tang {
            q[b] += off(rem % n) * dx;
            rem /= n;
        }
        if sdf(q) > T::zero() {
            fluid += 1;
        }
    }
    T::from_count(fluid) / T::from_count(total)
}

/// Face-fraction lattice density used by [`voxelize`].
pub const FRACTION_SAMPLES: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct SolidMasks<T, const D: usize> {
    /// Cell centre inside a solid.
    pub chi_s: Vec<bool>,
    /// Solid cells on the surface band.
    pub chi_surf: Vec<bool>,
    /// Solid cells strictly inside (`chi_s` and not `chi_surf`).
    pub chi_in: Vec<bool>,
    /// Fluid fraction per face.
    pub alpha: StaggeredField<T, D>,
    /// Face-normal solid velocity on faces with `alpha < 1`.
    pub u_sn: StaggeredField<T, D>,
    /// Full solid velocity at the centres of solid cells (zero elsewhere).
    pub u_st: Vec<[T; D]>,
}

impl<T: Real, const D: usize> SolidMasks<T, D> {
    pub fn empty(desc: &GridDesc<T, D>) -> Self {
        let n = desc.num_cells();
        Self {
            chi_s: vec![false; n],
            chi_surf: vec![false; n],
            chi_in: vec![false; n],
            alpha: StaggeredField::from_fn(desc, Layout::Velocity, |_, _| T::one()),
            u_sn: StaggeredField::zeros(desc, Layout::Velocity),
            u_st: vec![[T::zero(); D]; n],
        }
    }

    pub fn any_solid(&self) -> bool {
        self.chi_s.iter().any(|v| *v)
    }
}

fn cell_index<const D: usize>(cells: &[usize; D], i: &[usize; D]) -> usize {
    let mut idx = 0;
    for a in (0..D).rev() {
        idx = idx * cells[a] + i[a];
    }
    idx
}

/// Masks, fractions and solid velocities of `scene` at time `t`; velocities
/// difference the poses at `t - dt` and `t`.
pub fn voxelize<T: Real, const D: usize>(
    scene: &SolidScene<T>,
    desc: &GridDesc<T, D>,
    t: T,
    dt: T,
) -> SolidMasks<T, D> {
    let mut m = SolidMasks::empty(desc);
    if scene.is_empty() {
        return m;
    }
    let cells = desc.cells;
    let n = desc.num_cells();
    let sdf_c: Vec<T> = (0..n)
        .into_par_iter()
        .map(|c| {
            let mut idx = [0; D];
            let mut r = c;
            for a in 0..D {
                idx[a] = r % cells[a];
                r /= cells[a];
            }
            scene.sdf(desc.cell_center(idx), t)
        })
        .collect();
    m.chi_s = sdf_c.iter().map(|v| *v < T::zero()).collect();
    let band = T::from_count(D).sqrt() * T::lit(0.5) * desc.dx;
    let mut candidate = vec![false; n];
    let mut touches_fluid = vec![false; n];
    for_each_index(cells, |c, idx| {
        if m.chi_s[c] {
            for a in 0..D {
                for step in [-1isize, 1] {
                    let j = idx[a] as isize + step;
                    if j < 0 || j >= cells[a] as isize {
                        continue;
                    }
                    let mut nb = idx;
                    nb[a] = j as usize;
                    if !m.chi_s[cell_index(&cells, &nb)] {
                        touches_fluid[c] = true;
                    }
                }
            }
        }
        candidate[c] = touches_fluid[c] || sdf_c[c].abs() < band;
    });

    for a in 0..D {
        let arr = &mut m.alpha.comps[a];
        let shape = arr.shape;
        let stagger = arr.stagger;
        arr.data.par_iter_mut().enumerate().for_each(|(k, v)| {
            let mut idx = [0; D];
            let mut r = k;
            for b in 0..D {
                idx[b] = r % shape[b];
                r /= shape[b];
            }
            let mut adj = Vec::with_capacity(2);
            if idx[a] > 0 {
                let mut l = idx;
                l[a] -= 1;
                adj.push(cell_index(&cells, &l));
            }
            if idx[a] < cells[a] {
                adj.push(cell_index(&cells, &idx));
            }
            if adj.iter().any(|&c| candidate[c]) {
                let center: [T; D] = std::array::from_fn(|b| {
                    let off = if stagger[b] { T::lit(0.5) } else { T::zero() };
                    desc.origin[b] + (T::from_count(idx[b]) + off) * desc.dx
                });
                *v = face_fraction(|q| scene.sdf(q, t), center, a, desc.dx, FRACTION_SAMPLES);
            } else if adj.iter().any(|&c| m.chi_s[c]) {
                *v = T::zero();
            }
        });
    }

    // surface band: solid cells next to fluid or owning a cut face
    m.chi_surf = touches_fluid;
    for a in 0..D {
        let arr = &m.alpha.comps[a];
        for k in 0..arr.data.len() {
            let v = arr.data[k];
            if v > T::zero() && v < T::one() {
                let idx = arr.multi_index(k);
                for side in [0usize, 1] {
                    let mut c = idx;
                    if side == 0 {
                        if c[a] == 0 {
                            continue;
                        }
                        c[a] -= 1;
                    } else if c[a] == cells[a] {
                        continue;
                    }
                    let ci = cell_index(&cells, &c);
                    if m.chi_s[ci] {
                        m.chi_surf[ci] = true;
                    }
                }
            }
        }
    }
    m.chi_in = (0..n).map(|c| m.chi_s[c] && !m.chi_surf[c]).collect();

    for_each_index(cells, |c, idx| {
        if m.chi_s[c] {
            m.u_st[c] = scene.velocity(desc.cell_center(idx), t, dt);
        }
    });
    for a in 0..D {
        let al = &m.alpha.comps[a];
        let out = &mut m.u_sn.comps[a];
        for k in 0..al.data.len() {
            if al.data[k] < T::one() {
                let p = al.position(desc, al.multi_index(k));
                out.data[k] = scene.velocity(p, t, dt)[a];
            }
        }
    }
    m
}

/// Whether face `idx` of axis `a` is in the penalization band, and the solid
/// neighbour cells `N` that feed it.
fn band_neighbors<const D: usize>(
    cells: &[usize; D],
    chi_s: &[bool],
    a: usize,
    idx: [usize; D],
) -> Option<Vec<usize>> {
    if idx[a] == 0 || idx[a] == cells[a] {
        return None;
    }
    let mut left = idx;
    left[a] -= 1;
    if chi_s[cell_index(cells, &left)] || chi_s[cell_index(cells, &idx)] {
        return None;
    }
    let mut solid = Vec::new();
    for r in [left, idx] {
        for b in (0..D).filter(|&b| b != a) {
            for s in [-1isize, 1] {
                let j = r[b] as isize + s;
                if j < 0 || j >= cells[b] as isize {
                    continue;
                }
                let mut nb = r;
                nb[b] = j as usize;
                let ci = cell_index(cells, &nb);
                if chi_s[ci] {
                    solid.push(ci);
                }
            }
        }
    }
    (!solid.is_empty()).then_some(solid)
}

/// Number of neighbour cells around a face: 8 in 3D, 4 in 2D.
pub fn neighbor_count(dim: usize) -> usize {
    4 * (dim - 1)
}

/// Penalization velocity on the band of fluid faces with solid neighbours:
/// `(1 / |N|) sum_N chi_S(N) (u_St(N) - u)`.
pub fn penalization_velocity<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
    masks: &SolidMasks<T, D>,
) -> StaggeredField<T, D> {
    let mut out = StaggeredField::zeros(desc, Layout::Velocity);
    if !masks.any_solid() {
        return out;
    }
    let w = T::one() / T::from_count(neighbor_count(D));
    let cells = desc.cells;
    for a in 0..D {
        let src = &u.comps[a];
        let dst = &mut out.comps[a];
        for k in 0..src.data.len() {
            let idx = src.multi_index(k);
            if let Some(nbs) = band_neighbors(&cells, &masks.chi_s, a, idx) {
                let s: T = nbs.iter().map(|&c| masks.u_st[c][a] - src.data[k]).sum();
                dst.data[k] = w * s;
            }
        }
    }
    out
}

/// Faces where [`penalization_velocity`] may be non-zero.
pub fn penalization_band<T: Real, const D: usize>(desc: &GridDesc<T, D>, masks: &SolidMasks<T, D>) -> Vec<Vec<bool>> {
    (0..D)
        .map(|a| {
            let shape = desc.shape_of(Layout::Velocity.stagger::<D>(a));
            let mut band = vec![false; shape.iter().product()];
            for_each_index(shape, |k, idx| {
                band[k] = band_neighbors(&desc.cells, &masks.chi_s, a, idx).is_some();
            });
            band
        })
        .collect()
}

/// `lambda * curl(u_pen)`.
pub fn penalization_vorticity<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u_pen: &StaggeredField<T, D>,
    lambda: T,
) -> StaggeredField<T, D> {
    let mut w = curl_face_to_vort(desc, u_pen);
    w.scale(lambda);
    w
}

#[cfg(test)]
mod tests;
