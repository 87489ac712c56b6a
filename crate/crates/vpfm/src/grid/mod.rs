//! Uniform staggered grids in 2D and 3D.
//!
//! Storage follows the vortex-method MAC layout. In 3D vorticity and vector
//! potential live on cell edges, velocity on faces and scalars on centers. In
//! 2D the scalar vorticity and streamfunction live on nodes, velocity on edges
//! (which play the role of faces) and scalars on centers.
//!
//! Cell `(i, j, k)` has its center at `origin + (i + 0.5, j + 0.5, k + 0.5) * dx`.
//! Arrays are flat with the x index varying fastest.

mod io;
mod kernel;
mod stencil;

pub use io::{read_dump, write_dump, write_vtk, DumpHeader};
pub use kernel::{
    bspline, kernel_at, sample_array, sample_array_grad, sample_velocity, sample_velocity_gradient,
    sample_velocity_hessian, sample_velocity_jet, sample_vorticity, KernelWeights, VelocityJet,
};
pub use stencil::{curl_face_to_vort, curl_vort_to_face, divergence, laplacian_edge, Ghost};

use crate::Real;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("every axis needs at least 4 cells, got {0:?}")]
    TooFewCells(Vec<usize>),
    #[error("field layout mismatch: {0}")]
    Shape(String),
    #[error("dump format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] IoErrorWrap),
}

/// `std::io::Error` is not `Clone`; keep the message only.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct IoErrorWrap(pub String);

impl From<std::io::Error> for GridError {
    fn from(e: std::io::Error) -> Self {
        GridError::Io(IoErrorWrap(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridDesc<T, const D: usize> {
    pub cells: [usize; D],
    pub dx: T,
    pub origin: [T; D],
}

impl<T: Real, const D: usize> GridDesc<T, D> {
    pub fn new(cells: [usize; D], dx: T, origin: [T; D]) -> Result<Self, GridError> {
        assert!(D == 2 || D == 3, "only 2D and 3D grids are supported");
        if !(dx > T::zero()) || !dx.is_finite() {
            return Err(GridError::BadSpacing(dx.as_f64()));
        }
        if cells.iter().any(|&n| n < 4) {
            return Err(GridError::TooFewCells(cells.to_vec()));
        }
        Ok(Self { cells, dx, origin })
    }

    /// Grid of `cells` covering `[0, extent_x] x ...` with spacing chosen from the x axis.
    pub fn unit(cells: [usize; D], length_x: T) -> Result<Self, GridError> {
        Self::new(cells, length_x / T::from_count(cells[0]), [T::zero(); D])
    }

    pub const fn dim(&self) -> usize {
        D
    }

    pub fn extent(&self) -> [T; D] {
        std::array::from_fn(|a| T::from_count(self.cells[a]) * self.dx)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_center(&self, c: [usize; D]) -> [T; D] {
        let h = T::lit(0.5);
        std::array::from_fn(|a| self.origin[a] + (T::from_count(c[a]) + h) * self.dx)
    }

    /// Shape of an array with the given per-axis staggering (`true` = half offset).
    pub fn shape_of(&self, stagger: [bool; D]) -> [usize; D] {
        std::array::from_fn(|a| if stagger[a] { self.cells[a] } else { self.cells[a] + 1 })
    }

    pub fn contains(&self, p: &[T; D]) -> bool {
        let e = self.extent();
        (0..D).all(|a| p[a] >= self.origin[a] && p[a] <= self.origin[a] + e[a])
    }

    /// Same grid with every axis scaled by an integer refinement factor.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            cells: self.cells.map(|n| n * factor),
            dx: self.dx / T::from_count(factor),
            origin: self.origin,
        }
    }
}

/// Which quantity a field stores; fixes the staggering of each component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Vorticity / vector potential: edges in 3D (3 components), nodes in 2D (1 component).
    Vorticity,
    /// Velocity: one component per axis on the faces normal to that axis.
    Velocity,
    /// Cell-centered scalar.
    Center,
}

impl Layout {
    pub fn num_comps(self, dim: usize) -> usize {
        match self {
            Layout::Vorticity => {
                if dim == 2 {
                    1
                } else {
                    3
                }
            }
            Layout::Velocity => dim,
            Layout::Center => 1,
        }
    }

    /// Per-axis staggering of component `comp` (`true` = sample at half offset).
    pub fn stagger<const D: usize>(self, comp: usize) -> [bool; D] {
        match self {
            Layout::Vorticity => {
                if D == 2 {
                    [false; D]
                } else {
                    std::array::from_fn(|a| a == comp)
                }
            }
            Layout::Velocity => std::array::from_fn(|a| a != comp),
            Layout::Center => [true; D],
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Layout::Vorticity => "vorticity",
            Layout::Velocity => "velocity",
            Layout::Center => "center",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "vorticity" => Some(Layout::Vorticity),
            "velocity" => Some(Layout::Velocity),
            "center" => Some(Layout::Center),
            _ => None,
        }
    }
}

/// One component of a staggered field.
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredArray<T, const D: usize> {
    pub shape: [usize; D],
    pub stagger: [bool; D],
    pub data: Vec<T>,
}

impl<T: Real, const D: usize> StaggeredArray<T, D> {
    pub fn zeros(desc: &GridDesc<T, D>, stagger: [bool; D]) -> Self {
        let shape = desc.shape_of(stagger);
        Self {
            shape,
            stagger,
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn strides(&self) -> [usize; D] {
        strides(&self.shape)
    }

    #[inline(always)]
    pub fn index(&self, i: [usize; D]) -> usize {
        let mut idx = 0;
        for a in (0..D).rev() {
            debug_assert!(i[a] < self.shape[a]);
            idx = idx * self.shape[a] + i[a];
        }
        idx
    }

    #[inline(always)]
    pub fn get(&self, i: [usize; D]) -> T {
        self.data[self.index(i)]
    }

    #[inline(always)]
    pub fn set(&mut self, i: [usize; D], v: T) {
        let k = self.index(i);
        self.data[k] = v;
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; D] {
        let mut out = [0; D];
        for a in 0..D {
            out[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
        out
    }

    /// World position of sample `i`.
    pub fn position(&self, desc: &GridDesc<T, D>, i: [usize; D]) -> [T; D] {
        let h = T::lit(0.5);
        std::array::from_fn(|a| {
            let off = if self.stagger[a] { h } else { T::zero() };
            desc.origin[a] + (T::from_count(i[a]) + off) * desc.dx
        })
    }

    /// True when the sample lies on the domain boundary along some node-type axis.
    pub fn on_boundary(&self, i: [usize; D]) -> bool {
        (0..D).any(|a| !self.stagger[a] && (i[a] == 0 || i[a] + 1 == self.shape[a]))
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

pub(crate) fn strides<const D: usize>(shape: &[usize; D]) -> [usize; D] {
    let mut s = [0; D];
    let mut acc = 1;
    for a in 0..D {
        s[a] = acc;
        acc *= shape[a];
    }
    s
}

/// Iterates every multi-index of `shape` in storage order.
pub fn for_each_index<const D: usize>(shape: [usize; D], mut f: impl FnMut(usize, [usize; D])) {
    let total: usize = shape.iter().product();
    let mut i = [0usize; D];
    for flat in 0..total {
        f(flat, i);
        for a in 0..D {
            i[a] += 1;
            if i[a] < shape[a] {
                break;
            }
            i[a] = 0;
        }
    }
}

/// A full staggered field: one array per component in the layout's positions.
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredField<T, const D: usize> {
    pub layout: Layout,
    pub comps: Vec<StaggeredArray<T, D>>,
}

impl<T: Real, const D: usize> StaggeredField<T, D> {
    pub fn zeros(desc: &GridDesc<T, D>, layout: Layout) -> Self {
        let comps = (0..layout.num_comps(D))
            .map(|c| StaggeredArray::zeros(desc, layout.stagger::<D>(c)))
            .collect();
        Self { layout, comps }
    }

    /// Samples `f(component, position)` at every storage location.
    pub fn from_fn(desc: &GridDesc<T, D>, layout: Layout, f: impl Fn(usize, [T; D]) -> T) -> Self {
        let mut out = Self::zeros(desc, layout);
        for (c, arr) in out.comps.iter_mut().enumerate() {
            let shape = arr.shape;
            let stagger = arr.stagger;
            let probe = StaggeredArray::<T, D> {
                shape,
                stagger,
                data: Vec::new(),
            };
            for_each_index(shape, |k, i| {
                arr.data[k] = f(c, probe.position(desc, i));
            });
        }
        out
    }

    pub fn num_comps(&self) -> usize {
        self.comps.len()
    }

    /// Checks that every component has the shape implied by `desc`.
    pub fn check(&self, desc: &GridDesc<T, D>) -> Result<(), GridError> {
        if self.comps.len() != self.layout.num_comps(D) {
            return Err(GridError::Shape(format!(
                "{} field with {} components",
                self.layout.tag(),
                self.comps.len()
            )));
        }
        for (c, arr) in self.comps.iter().enumerate() {
            let st = self.layout.stagger::<D>(c);
            let shape = desc.shape_of(st);
            if arr.stagger != st || arr.shape != shape || arr.data.len() != shape.iter().product() {
                return Err(GridError::Shape(format!(
                    "component {c} of {} field has shape {:?}, expected {:?}",
                    self.layout.tag(),
                    arr.shape,
                    shape
                )));
            }
        }
        Ok(())
    }

    pub fn fill(&mut self, v: T) {
        for a in &mut self.comps {
            a.data.iter_mut().for_each(|x| *x = v);
        }
    }

    pub fn max_abs(&self) -> T {
        self.comps.iter().fold(T::zero(), |m, a| m.max(a.max_abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.comps.iter().all(|a| a.data.iter().all(|v| v.is_finite()))
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        assert_eq!(self.layout, other.layout);
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += s * *y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.comps {
            a.data.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// Largest entrywise difference to `other`.
    pub fn max_diff(&self, other: &Self) -> T {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.data.iter().zip(&b.data).map(|(x, y)| (*x - *y).abs()))
            .fold(T::zero(), T::max)
    }

    /// Sets entries on boundary planes (node-type axes) to zero.
    pub fn zero_boundary(&mut self) {
        for arr in &mut self.comps {
            let probe = StaggeredArray::<T, D> {
                shape: arr.shape,
                stagger: arr.stagger,
                data: Vec::new(),
            };
            let data = &mut arr.data;
            for_each_index(probe.shape, |k, i| {
                if probe.on_boundary(i) {
                    data[k] = T::zero();
                }
            });
        }
    }
}
