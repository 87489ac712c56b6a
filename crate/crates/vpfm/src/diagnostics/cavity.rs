use crate::dynamics::SimState;
use crate::grid::sample_velocity;

/// Checked-in cavity reference values, one row per Reynolds number.
pub const GHIA_DATA: &str = include_str!("../../data/cavity_reference.csv");

/// Centerline extrema from the classic tabulated cavity solutions and the
/// lid-midpoint vorticity (clockwise positive).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhiaReference {
    pub re: f64,
    /// Minimum of `u` along the vertical centerline.
    pub u_min: f64,
    /// Extrema of `v` along the horizontal centerline.
    pub v_max: f64,
    pub v_min: f64,
    pub lid_mid_vorticity: f64,
}

fn parse_reference() -> Vec<GhiaReference> {
    GHIA_DATA
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("re,"))
        .map(|l| {
            let v: Vec<f64> = l
                .split(',')
                .map(|t| t.trim().parse().expect("numeric cavity reference"))
                .collect();
            GhiaReference {
                re: v[0],
                u_min: v[1],
                v_max: v[2],
                v_min: v[3],
                lid_mid_vorticity: v[4],
            }
        })
        .collect()
}

pub fn ghia_reference(re: f64) -> Option<GhiaReference> {
    parse_reference().into_iter().find(|r| (r.re - re).abs() < 1e-9 * re.max(1.0))
}

/// Cavity observables, sampled with the solver's own interpolation kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityProbe {
    pub re: f64,
    /// Vorticity at the lid midpoint, clockwise positive.
    pub lid_mid_vorticity: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub u_min: f64,
}

impl CavityProbe {
    /// Largest relative deviation of the four probes from `r`.
    pub fn max_relative_error(&self, r: &GhiaReference) -> f64 {
        [
            (self.lid_mid_vorticity, r.lid_mid_vorticity),
            (self.v_min, r.v_min),
            (self.v_max, r.v_max),
            (self.u_min, r.u_min),
        ]
        .iter()
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max)
    }
}

/// Probes a square cavity whose lid is the top wall. Centerline extrema are
/// taken over `8 n + 1` equispaced samples.
pub fn cavity_probe(state: &SimState<f64, 2>, re: f64) -> CavityProbe {
    let desc = state.desc();
    let [nx, ny] = desc.cells;
    let ext = desc.extent();
    let (ox, oy) = (desc.origin[0], desc.origin[1]);
    let lid = state.omega.comps[0].get([nx / 2, ny]);
    let samples = 8 * nx.max(ny);
    let (mut v_min, mut v_max, mut u_min) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for s in 0..=samples {
        let f = s as f64 / samples as f64;
        let v = sample_velocity(desc, &state.u, &[ox + f * ext[0], oy + 0.5 * ext[1]])[1];
        v_min = v_min.min(v);
        v_max = v_max.max(v);
        let u = sample_velocity(desc, &state.u, &[ox + 0.5 * ext[0], oy + f * ext[1]])[0];
        u_min = u_min.min(u);
    }
    CavityProbe {
        re,
        lid_mid_vorticity: -lid,
        v_min,
        v_max,
        u_min,
    }
}
