//! Integral measures, failure detection, cavity probes and convergence
//! studies.

mod cavity;
mod convergence;

pub use cavity::{cavity_probe, ghia_reference, CavityProbe, GhiaReference, GHIA_DATA};
pub use convergence::{
    interior_error, observed_orders, run_convergence, run_taylor_green, taylor_green_config, taylor_green_error,
    taylor_green_omega, taylor_green_state, ConvergenceRow, ConvergenceTable, TaylorGreenSetup,
};

use crate::grid::{divergence, for_each_index, GridDesc, Layout, StaggeredField};
use crate::solids::{penalization_band, SolidMasks, SolidScene};
use crate::Real;

/// Normalized energy below which a run counts as numerically dissipated.
pub const DISSIPATION_THRESHOLD: f64 = 0.94;
/// Normalized energy above which a run counts as exploded.
pub const EXPLOSION_THRESHOLD: f64 = 1.04;

fn cell_volume<T: Real, const D: usize>(desc: &GridDesc<T, D>) -> f64 {
    desc.dx.as_f64().powi(D as i32)
}

/// Kinetic energy `1/2 sum |u|^2 dx^D` over faces, each face weighted by its
/// fluid fraction and by the trapezoid weight along its normal (1/2 on walls).
pub fn kinetic_energy<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
    alpha: Option<&StaggeredField<T, D>>,
) -> f64 {
    assert_eq!(u.layout, Layout::Velocity);
    let mut sum = 0.0;
    for a in 0..D {
        let arr = &u.comps[a];
        let n = arr.shape[a];
        for_each_index(arr.shape, |k, i| {
            let mut w = if i[a] == 0 || i[a] + 1 == n { 0.5 } else { 1.0 };
            if let Some(al) = alpha {
                w *= al.comps[a].data[k].as_f64();
            }
            let v = arr.data[k].as_f64();
            sum += w * v * v;
        });
    }
    0.5 * sum * cell_volume(desc)
}

/// `integral |omega|^k`. Planar runs use trapezoid weights on the nodes; in 3D
/// each edge component is averaged to cell centres first.
pub fn vorticity_moment<T: Real, const D: usize>(desc: &GridDesc<T, D>, omega: &StaggeredField<T, D>, k: i32) -> f64 {
    assert_eq!(omega.layout, Layout::Vorticity);
    let kf = k as f64;
    let mut sum = 0.0;
    if D == 2 {
        let arr = &omega.comps[0];
        for_each_index(arr.shape, |f, i| {
            let w: f64 = (0..D)
                .map(|a| if i[a] == 0 || i[a] + 1 == arr.shape[a] { 0.5 } else { 1.0 })
                .product();
            sum += w * arr.data[f].as_f64().abs().powf(kf);
        });
    } else {
        for_each_index(desc.cells, |_, cell| {
            let mut mag2 = 0.0;
            for arr in &omega.comps {
                let node_axes: Vec<usize> = (0..D).filter(|&a| !arr.stagger[a]).collect();
                let mut avg = 0.0;
                let corners = 1usize << node_axes.len();
                for m in 0..corners {
                    let mut idx = cell;
                    for (bit, &a) in node_axes.iter().enumerate() {
                        idx[a] += (m >> bit) & 1;
                    }
                    avg += arr.get(idx).as_f64();
                }
                avg /= corners as f64;
                mag2 += avg * avg;
            }
            sum += mag2.powf(kf / 2.0);
        });
    }
    sum * cell_volume(desc)
}

/// Enstrophy `1/2 sum |omega|^2 dx^D`.
pub fn enstrophy<T: Real, const D: usize>(desc: &GridDesc<T, D>, omega: &StaggeredField<T, D>) -> f64 {
    0.5 * vorticity_moment(desc, omega, 2)
}

/// Largest cell divergence over cells whose faces are all open.
pub fn max_abs_divergence<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
    alpha: Option<&StaggeredField<T, D>>,
) -> f64 {
    let div = divergence(desc, u);
    let mut m = 0.0f64;
    for_each_index(div.shape, |k, i| {
        if let Some(al) = alpha {
            for a in 0..D {
                let arr = &al.comps[a];
                let lo = arr.index(i);
                if arr.data[lo] < T::one() || arr.data[lo + arr.strides()[a]] < T::one() {
                    return;
                }
            }
        }
        m = m.max(div.data[k].as_f64().abs());
    });
    m
}

/// Mean `|u - v_solid|` over the faces of the penalization band, where
/// `v_solid` is the velocity of the nearest shape at the face; 0 without
/// solids.
pub fn penalization_slip<T: Real, const D: usize>(
    desc: &GridDesc<T, D>,
    u: &StaggeredField<T, D>,
    masks: &SolidMasks<T, D>,
    scene: &SolidScene<T>,
    t: T,
    dt: T,
) -> f64 {
    let band = penalization_band(desc, masks);
    let (mut sum, mut count) = (0.0, 0usize);
    for (a, faces) in band.iter().enumerate() {
        let arr = &u.comps[a];
        for (k, on) in faces.iter().enumerate() {
            if *on {
                let p = arr.position(desc, arr.multi_index(k));
                let v = scene.velocity(p, t, dt)[a];
                sum += (arr.data[k] - v).as_f64().abs();
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// One row of the per-frame diagnostics log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub frame: usize,
    pub time: f64,
    pub kinetic_energy: f64,
    pub normalized_energy: f64,
    pub enstrophy: f64,
    pub vorticity_moment_2: f64,
    pub vorticity_moment_4: f64,
    pub max_abs_div: f64,
    pub dissipation_failed: bool,
    pub explosion_failed: bool,
}

impl DiagnosticsRecord {
    /// Measures a frame. `reference_energy` is the frame-0 energy; the flags of
    /// `previous` carry over so they never clear once set.
    pub fn measure<T: Real, const D: usize>(
        frame: usize,
        time: f64,
        desc: &GridDesc<T, D>,
        u: &StaggeredField<T, D>,
        omega: &StaggeredField<T, D>,
        alpha: Option<&StaggeredField<T, D>>,
        reference_energy: Option<f64>,
        previous: Option<&DiagnosticsRecord>,
    ) -> Self {
        let e = kinetic_energy(desc, u, alpha);
        let e0 = reference_energy.unwrap_or(e);
        let normalized = if e0 > 0.0 { e / e0 } else { 1.0 };
        let m2 = vorticity_moment(desc, omega, 2);
        let (mut diss, mut expl) = previous.map_or((false, false), |p| (p.dissipation_failed, p.explosion_failed));
        diss |= normalized < DISSIPATION_THRESHOLD;
        expl |= normalized > EXPLOSION_THRESHOLD || !normalized.is_finite();
        Self {
            frame,
            time,
            kinetic_energy: e,
            normalized_energy: normalized,
            enstrophy: 0.5 * m2,
            vorticity_moment_2: m2,
            vorticity_moment_4: vorticity_moment(desc, omega, 4),
            max_abs_div: max_abs_divergence(desc, u, alpha),
            dissipation_failed: diss,
            explosion_failed: expl,
        }
    }

    pub const CSV_HEADER: &'static str = "frame,time,kinetic_energy,normalized_energy,enstrophy,vorticity_moment_2,vorticity_moment_4,max_abs_div,dissipation_failed,explosion_failed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{},{}",
            self.frame,
            self.time,
            self.kinetic_energy,
            self.normalized_energy,
            self.enstrophy,
            self.vorticity_moment_2,
            self.vorticity_moment_4,
            self.max_abs_div,
            self.dissipation_failed as u8,
            self.explosion_failed as u8
        )
    }
}

/// First threshold crossings of a normalized-energy series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct FailureScan {
    /// First frame with energy below [`DISSIPATION_THRESHOLD`].
    pub dissipation_frame: Option<usize>,
    /// First frame with energy above [`EXPLOSION_THRESHOLD`] (or non-finite).
    pub explosion_frame: Option<usize>,
}

/// The failure reported for a run: an explosion hides any dissipation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailurePoint {
    None,
    Dissipation(usize),
    Explosion(usize),
}

impl FailureScan {
    pub fn summary(&self) -> FailurePoint {
        match (self.explosion_frame, self.dissipation_frame) {
            (Some(f), _) => FailurePoint::Explosion(f),
            (None, Some(f)) => FailurePoint::Dissipation(f),
            (None, None) => FailurePoint::None,
        }
    }
}

pub fn failure_scan(normalized_energy: &[f64]) -> FailureScan {
    let dissipation_frame = normalized_energy.iter().position(|&e| e < DISSIPATION_THRESHOLD);
    let explosion_frame = normalized_energy
        .iter()
        .position(|&e| e > EXPLOSION_THRESHOLD || !e.is_finite());
    FailureScan {
        dissipation_frame,
        explosion_frame,
    }
}

#[cfg(test)]
mod tests;
