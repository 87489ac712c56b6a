//! Grid/particle transfers of vorticity.
//!
//! G2P samples the grid vorticity and its gradient with the folded quadratic
//! B-spline. P2G splats the affine particle reconstruction
//! `omega_p + grad(omega_p) . (x_i - x_p)` with raw kernel weights and
//! normalizes by the accumulated weight; nodes no particle reaches stay zero.

use crate::flowmap::VortexParticle;
use crate::grid::{kernel_at, sample_vorticity, GridDesc, Layout, StaggeredField};
use crate::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransferError {
    #[error("particles per cell must be at least 1")]
    NoParticles,
}

/// Which particle slots a G2P fills.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Segment {
    /// `omega_a` (start of the long map).
    Long,
    /// `omega_b` and `grad_omega_b` (start of the short map).
    Short,
}

pub fn g2p<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    omega: &StaggeredField<T, D>,
    particles: &mut [VortexParticle<T, D>],
    segment: Segment,
) {
    assert_eq!(omega.layout, Layout::Vorticity, "g2p expects a vorticity field");
    particles.par_iter_mut().for_each(|p| {
        let (w, g) = sample_vorticity(desc, omega, &p.pos);
        match segment {
            Segment::Long => p.omega_a = w,
            Segment::Short => {
                p.omega_b = w;
                p.grad_omega_b = g;
            }
        }
    });
}

/// Current particle state handed to P2G.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParticleSample<T, const D: usize> {
    pub pos: [T; D],
    pub omega: [T; 3],
    pub grad: [[T; D]; 3],
}

/// Weight and value accumulators, one pair per vorticity component.
#[derive(Clone, Debug, Default)]
pub struct TransferWorkspace<T> {
    pub weight: Vec<Vec<T>>,
    pub value: Vec<Vec<T>>,
}

impl<T: Real> TransferWorkspace<T> {
    fn reset<const D: usize>(&mut self, desc: &GridDesc<T, D>) {
        let nc = Layout::Vorticity.num_comps(D);
        let lens: Vec<usize> = (0..nc)
            .map(|c| desc.shape_of(Layout::Vorticity.stagger::<D>(c)).iter().product())
            .collect();
        for buf in [&mut self.weight, &mut self.value] {
            buf.resize_with(nc, Vec::new);
            for (v, &n) in buf.iter_mut().zip(&lens) {
                v.clear();
                v.resize(n, T::zero());
            }
        }
    }

    fn add(&mut self, other: &Self) {
        for (a, b) in self.weight.iter_mut().zip(&other.weight) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += *y);
        }
        for (a, b) in self.value.iter_mut().zip(&other.value) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += *y);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct P2gStats {
    /// Grid samples that received no particle weight.
    pub uncovered: usize,
    pub total: usize,
}

impl P2gStats {
    pub fn uncovered_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.uncovered as f64 / self.total as f64
        }
    }
}

fn splat<T: Real, const D: usize>(desc: &GridDesc<T, D>, samples: &[ParticleSample<T, D>], ws: &mut TransferWorkspace<T>) {
    let nc = ws.weight.len();
    let half = T::lit(0.5);
    for s in samples {
        for c in 0..nc {
            let stagger = Layout::Vorticity.stagger::<D>(c);
            let shape = desc.shape_of(stagger);
            let k = kernel_at(desc, &s.pos, stagger);
            let (wbuf, vbuf) = (&mut ws.weight[c], &mut ws.value[c]);
            for t in 0..3usize.pow(D as u32) {
                let mut rem = t;
                let mut flat = 0usize;
                let mut stride = 1usize;
                let mut wt = T::one();
                let mut affine = s.omega[c];
                let mut inside = true;
                for a in 0..D {
                    let o = rem % 3;
                    rem /= 3;
                    let i = k.base[a] + o as isize;
                    if i < 0 || i >= shape[a] as isize {
                        inside = false;
                        break;
                    }
                    let off = if stagger[a] { half } else { T::zero() };
                    let xi = desc.origin[a] + (T::from_isize(i).unwrap() + off) * desc.dx;
                    affine += s.grad[c][a] * (xi - s.pos[a]);
                    wt *= k.w[a][o];
                    flat += i as usize * stride;
                    stride *= shape[a];
                }
                if inside {
                    wbuf[flat] += wt;
                    vbuf[flat] += wt * affine;
                }
            }
        }
    }
}

/// Normalized gradient-augmented P2G. Work is split into a fixed number of
/// particle chunks whose accumulators are summed in order, so the result
/// depends on the worker count only through `rayon::current_num_threads`.
pub fn p2g<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    samples: &[ParticleSample<T, D>],
    ws: &mut TransferWorkspace<T>,
) -> (StaggeredField<T, D>, P2gStats) {
    p2g_chunked(desc, samples, ws, rayon::current_num_threads())
}

pub fn p2g_chunked<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    samples: &[ParticleSample<T, D>],
    ws: &mut TransferWorkspace<T>,
    chunks: usize,
) -> (StaggeredField<T, D>, P2gStats) {
    ws.reset(desc);
    let chunks = chunks.max(1);
    if chunks == 1 || samples.len() < 2 * chunks {
        splat(desc, samples, ws);
    } else {
        let size = samples.len().div_ceil(chunks);
        let partial: Vec<TransferWorkspace<T>> = samples
            .par_chunks(size)
            .map(|part| {
                let mut local = TransferWorkspace::default();
                local.reset(desc);
                splat(desc, part, &mut local);
                local
            })
            .collect();
        for p in &partial {
            ws.add(p);
        }
    }
    let mut out = StaggeredField::zeros(desc, Layout::Vorticity);
    let mut stats = P2gStats::default();
    for (c, arr) in out.comps.iter_mut().enumerate() {
        for (k, v) in arr.data.iter_mut().enumerate() {
            let w = ws.weight[c][k];
            stats.total += 1;
            if w > T::zero() {
                *v = ws.value[c][k] / w;
            } else {
                stats.uncovered += 1;
            }
        }
    }
    (out, stats)
}

/// Per-axis sub-lattice counts whose product is `ppc`, as even as possible.
pub fn lattice_counts<const D: usize>(ppc: usize) -> [usize; D] {
    let mut counts = [1usize; D];
    let mut n = ppc;
    let mut factors = Vec::new();
    let mut f = 2;
    while n > 1 {
        while n % f == 0 {
            factors.push(f);
            n /= f;
        }
        f += 1;
    }
    for &f in factors.iter().rev() {
        let a = (0..D).min_by_key(|&a| (counts[a], a)).unwrap();
        counts[a] *= f;
    }
    counts
}

/// Stratified particles: a `lattice_counts(ppc)` sub-lattice in every cell,
/// optionally jittered within each sub-cell by a seeded generator.
pub fn reseed_uniform<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    ppc: usize,
    jitter_seed: Option<u64>,
) -> Result<Vec<VortexParticle<T, D>>, TransferError> {
    if ppc == 0 {
        return Err(TransferError::NoParticles);
    }
    let counts = lattice_counts::<D>(ppc);
    let mut rng = jitter_seed.map(ChaCha8Rng::seed_from_u64);
    let mut out = Vec::with_capacity(desc.num_cells() * ppc);
    crate::grid::for_each_index(desc.cells, |_, cell| {
        crate::grid::for_each_index(counts, |_, sub| {
            let pos = std::array::from_fn(|a| {
                let frac = match rng.as_mut() {
                    Some(r) => (sub[a] as f64 + r.gen::<f64>()) / counts[a] as f64,
                    None => (sub[a] as f64 + 0.5) / counts[a] as f64,
                };
                desc.origin[a] + (T::from_count(cell[a]) + T::lit(frac)) * desc.dx
            });
            out.push(VortexParticle::new(pos));
        });
    });
    Ok(out)
}
