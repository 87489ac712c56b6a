//! Failure-point sweeps over the long flow-map length, with and without the
//! evolved Hessian.

use crate::config::{ConfigError, RunConfig};
use crate::driver::{describe, RunError};
use crate::scenes::{init_scene, Sim};
use std::fmt::Write as _;
use vpfm::diagnostics::{failure_scan, FailurePoint};
use vpfm::dynamics::SimState;

/// Parses `nL=10,20,40`.
pub fn parse_sweep(spec: &str) -> Result<Vec<usize>, ConfigError> {
    let bad = || ConfigError::Invalid(format!("sweep must look like nL=10,20,40, got {spec:?}"));
    let (key, list) = spec.split_once('=').ok_or_else(bad)?;
    if !matches!(key.trim(), "nL" | "n_long") {
        return Err(bad());
    }
    let values: Vec<usize> = list
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    if values.is_empty() || values.contains(&0) {
        return Err(bad());
    }
    Ok(values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n_long: usize,
    pub use_hessian: bool,
    pub steps: usize,
    pub time: f64,
    pub failure: FailurePoint,
    /// First frame with the explosion flag, if any.
    pub explosion_frame: Option<usize>,
    pub final_energy: f64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "n_long,use_hessian,steps,time,failure,failure_frame,explosion_frame,final_energy";

    pub fn csv_row(&self) -> String {
        let frame = match self.failure {
            FailurePoint::None => String::new(),
            FailurePoint::Dissipation(f) | FailurePoint::Explosion(f) => f.to_string(),
        };
        let kind = match self.failure {
            FailurePoint::None => "none",
            FailurePoint::Dissipation(_) => "dissipation",
            FailurePoint::Explosion(_) => "explosion",
        };
        format!(
            "{},{},{},{:.6e},{kind},{frame},{},{:.9e}",
            self.n_long,
            self.use_hessian as u8,
            self.steps,
            self.time,
            self.explosion_frame.map_or(String::new(), |f| f.to_string()),
            self.final_energy
        )
    }

    /// Frame of the reported failure.
    pub fn failure_frame(&self) -> Option<usize> {
        match self.failure {
            FailurePoint::None => None,
            FailurePoint::Dissipation(f) | FailurePoint::Explosion(f) => Some(f),
        }
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", SweepRow::CSV_HEADER);
    for r in rows {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

/// Runs until the first explosion flag or the configured limits.
fn until_explosion<const D: usize>(mut s: SimState<f64, D>) -> Result<SweepRow, RunError> {
    s.run_observed(|st, _| !st.diagnostics.last().is_some_and(|r| r.explosion_failed))?;
    let energy: Vec<f64> = s.diagnostics.iter().map(|r| r.normalized_energy).collect();
    Ok(SweepRow {
        n_long: s.config.n_long,
        use_hessian: s.config.use_hessian,
        steps: s.steps_taken(),
        time: s.time,
        failure: failure_scan(&energy).summary(),
        explosion_frame: s.diagnostics.iter().find(|r| r.explosion_failed).map(|r| r.frame),
        final_energy: *energy.last().expect("frame 0"),
    })
}

/// One run per `(n_long, use_hessian)` pair; `on_row` sees each result as it
/// completes.
pub fn sweep(
    base: &RunConfig,
    values: &[usize],
    hessian: &[bool],
    mut on_row: impl FnMut(&SweepRow),
) -> Result<Vec<SweepRow>, RunError> {
    let mut rows = Vec::new();
    for &n in values {
        for &h in hessian {
            let mut cfg = base.clone();
            cfg.sim.n_long = Some(n);
            cfg.sim.use_hessian = Some(h);
            let cfg = cfg.resolve()?;
            let row = match init_scene(&cfg)? {
                Sim::Planar(s) => until_explosion(s)?,
                Sim::Spatial(s) => until_explosion(s)?,
            };
            log::info!(
                "nL = {n} hessian = {h}: {} after {} steps",
                describe(row.failure),
                row.steps
            );
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_parsing() {
        assert_eq!(parse_sweep("nL=10,20,40,60").unwrap(), vec![10, 20, 40, 60]);
        assert_eq!(parse_sweep("n_long = 5").unwrap(), vec![5]);
        for bad in ["", "nL", "x=1", "nL=", "nL=1,a", "nL=0"] {
            assert!(parse_sweep(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn rows_render() {
        let r = SweepRow {
            n_long: 40,
            use_hessian: true,
            steps: 12,
            time: 0.5,
            failure: FailurePoint::Explosion(9),
            explosion_frame: Some(9),
            final_energy: 1.2,
        };
        assert_eq!(r.failure_frame(), Some(9));
        let csv = sweep_csv(&[r]);
        assert!(csv.starts_with(SweepRow::CSV_HEADER));
        assert!(csv.contains("\n40,1,12,5.000000e-1,explosion,9,9,"));
    }
}
