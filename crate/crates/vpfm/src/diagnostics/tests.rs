use super::*;
use crate::dynamics::{SimConfig, SimState, WallVorticity};
use proptest::prelude::*;
use std::f64::consts::PI;

fn unit_box<const D: usize>(n: usize) -> GridDesc<f64, D> {
    GridDesc::new([n; D], 1.0 / n as f64, [0.0; D]).unwrap()
}

fn tg_desc(n: usize) -> GridDesc<f64, 2> {
    GridDesc::new([n, n], 2.0 * PI / n as f64, [0.0, 0.0]).unwrap()
}

fn tg_velocity(desc: &GridDesc<f64, 2>) -> StaggeredField<f64, 2> {
    StaggeredField::from_fn(desc, Layout::Velocity, |c, x| {
        if c == 0 {
            x[0].sin() * x[1].cos()
        } else {
            -x[0].cos() * x[1].sin()
        }
    })
}

#[test]
fn zero_velocity_has_zero_energy() {
    let d3 = unit_box::<3>(6);
    assert_eq!(kinetic_energy(&d3, &StaggeredField::zeros(&d3, Layout::Velocity), None), 0.0);
    let d2 = unit_box::<2>(6);
    assert_eq!(kinetic_energy(&d2, &StaggeredField::zeros(&d2, Layout::Velocity), None), 0.0);
}

#[test]
fn uniform_stream_on_unit_box() {
    for n in [4, 7, 16] {
        let d = unit_box::<3>(n);
        let u = StaggeredField::from_fn(&d, Layout::Velocity, |c, _| if c == 0 { 1.0 } else { 0.0 });
        assert!((kinetic_energy(&d, &u, None) - 0.5).abs() < 1e-13);
    }
    let d = unit_box::<2>(9);
    let u = StaggeredField::from_fn(&d, Layout::Velocity, |c, _| if c == 1 { 1.0 } else { 0.0 });
    assert!((kinetic_energy(&d, &u, None) - 0.5).abs() < 1e-13);
}

#[test]
fn fractions_weight_the_energy() {
    let d = unit_box::<2>(8);
    let u = StaggeredField::from_fn(&d, Layout::Velocity, |c, _| if c == 0 { 1.0 } else { 0.0 });
    let mut alpha = StaggeredField::zeros(&d, Layout::Velocity);
    alpha.fill(0.5);
    assert!((kinetic_energy(&d, &u, Some(&alpha)) - 0.25).abs() < 1e-13);
}

#[test]
fn taylor_green_energy_matches_the_integral() {
    // trapezoid sums of a full trigonometric period are exact
    for n in [8, 16, 32] {
        let d = tg_desc(n);
        let e = kinetic_energy(&d, &tg_velocity(&d), None);
        assert!((e / (PI * PI) - 1.0).abs() < 1e-12, "{n}: {e}");
    }
}

#[test]
fn polynomial_energy_converges_at_second_order() {
    // u_x = x^2 y on the unit square: E = 1/2 * 1/5 * 1/3
    let exact = 1.0 / 30.0;
    let err = |n: usize| {
        let d = unit_box::<2>(n);
        let u = StaggeredField::from_fn(&d, Layout::Velocity, |c, x| if c == 0 { x[0] * x[0] * x[1] } else { 0.0 });
        (kinetic_energy(&d, &u, None) - exact).abs()
    };
    let (e16, e32, e64) = (err(16), err(32), err(64));
    for (a, b) in [(e16, e32), (e32, e64)] {
        let order = (a / b).log2();
        assert!((order - 2.0).abs() < 0.1, "{order}");
    }
}

#[test]
fn taylor_green_moments() {
    let d = tg_desc(32);
    let w = taylor_green_omega(&d, 0.0, 0.0);
    // omega = 2 sin x sin y: int omega^2 = 4 pi^2, int omega^4 = 9 pi^2
    assert!((vorticity_moment(&d, &w, 2) / (4.0 * PI * PI) - 1.0).abs() < 1e-12);
    assert!((vorticity_moment(&d, &w, 4) / (9.0 * PI * PI) - 1.0).abs() < 1e-12);
    assert!((enstrophy(&d, &w) / (2.0 * PI * PI) - 1.0).abs() < 1e-12);
}

#[test]
fn moments_in_three_dimensions() {
    let d = unit_box::<3>(8);
    let w = StaggeredField::from_fn(&d, Layout::Vorticity, |c, _| [1.0, 2.0, 2.0][c]);
    assert!((vorticity_moment(&d, &w, 2) - 9.0).abs() < 1e-12);
    assert!((vorticity_moment(&d, &w, 4) - 81.0).abs() < 1e-10);
}

#[test]
fn divergence_skips_cut_cells() {
    let d = unit_box::<2>(6);
    let u = StaggeredField::from_fn(&d, Layout::Velocity, |c, x| if c == 0 { x[0] } else { 0.0 });
    assert!((max_abs_divergence(&d, &u, None) - 1.0).abs() < 1e-12);
    let mut alpha = StaggeredField::zeros(&d, Layout::Velocity);
    alpha.fill(1.0);
    assert!((max_abs_divergence(&d, &u, Some(&alpha)) - 1.0).abs() < 1e-12);
    alpha.fill(0.9);
    assert_eq!(max_abs_divergence(&d, &u, Some(&alpha)), 0.0);
}

#[test]
fn record_flags_are_sticky() {
    let d = tg_desc(8);
    let u = tg_velocity(&d);
    let w = taylor_green_omega(&d, 0.0, 0.0);
    let e0 = kinetic_energy(&d, &u, None);
    let r0 = DiagnosticsRecord::measure(0, 0.0, &d, &u, &w, None, None, None);
    assert_eq!(r0.normalized_energy, 1.0);
    assert!(!r0.dissipation_failed && !r0.explosion_failed);

    let mut low = u.clone();
    low.scale(0.9);
    let r1 = DiagnosticsRecord::measure(1, 0.1, &d, &low, &w, None, Some(e0), Some(&r0));
    assert!((r1.normalized_energy - 0.81).abs() < 1e-12);
    assert!(r1.dissipation_failed && !r1.explosion_failed);

    let r2 = DiagnosticsRecord::measure(2, 0.2, &d, &u, &w, None, Some(e0), Some(&r1));
    assert!(r2.dissipation_failed);
    let mut high = u.clone();
    high.scale(1.1);
    let r3 = DiagnosticsRecord::measure(3, 0.3, &d, &high, &w, None, Some(e0), Some(&r2));
    assert!(r3.dissipation_failed && r3.explosion_failed);

    let z = StaggeredField::zeros(&d, Layout::Velocity);
    let rz = DiagnosticsRecord::measure(0, 0.0, &d, &z, &w, None, Some(0.0), None);
    assert_eq!(rz.normalized_energy, 1.0);
}

#[test]
fn csv_row_matches_header() {
    let d = tg_desc(8);
    let r = DiagnosticsRecord::measure(
        4,
        0.5,
        &d,
        &tg_velocity(&d),
        &taylor_green_omega(&d, 0.0, 0.0),
        None,
        None,
        None,
    );
    let row = r.csv_row();
    assert_eq!(row.split(',').count(), DiagnosticsRecord::CSV_HEADER.split(',').count());
    assert!(row.starts_with("4,"));
    assert!(row.ends_with(",0,0"));
}

#[test]
fn failure_scan_examples() {
    let flat = vec![1.0; 100];
    assert_eq!(failure_scan(&flat).summary(), FailurePoint::None);

    let mut dip = vec![1.0; 100];
    for (i, e) in dip.iter_mut().enumerate() {
        *e = if i < 50 { 1.0 - 0.05 * i as f64 / 50.0 } else { 0.93 };
    }
    let s = failure_scan(&dip);
    assert_eq!(s.dissipation_frame, Some(50));
    assert_eq!(s.explosion_frame, None);
    assert_eq!(s.summary(), FailurePoint::Dissipation(50));

    let mut both = vec![1.0; 60];
    both[20] = 1.05;
    both[40] = 0.93;
    let s = failure_scan(&both);
    assert_eq!(s.explosion_frame, Some(20));
    assert_eq!(s.dissipation_frame, Some(40));
    assert_eq!(s.summary(), FailurePoint::Explosion(20));

    // the thresholds themselves do not count as crossings
    assert_eq!(failure_scan(&[1.0, 0.94, 1.04]).summary(), FailurePoint::None);
    assert_eq!(failure_scan(&[1.0, f64::NAN]).summary(), FailurePoint::Explosion(1));
}

proptest! {
    #[test]
    fn failure_scan_is_idempotent(series in prop::collection::vec(0.9f64..1.06, 1..200)) {
        let a = failure_scan(&series);
        prop_assert_eq!(a, failure_scan(&series));
        // first crossings only depend on the prefix up to them
        if let Some(f) = a.dissipation_frame {
            prop_assert!(series[f] < DISSIPATION_THRESHOLD);
            prop_assert!(series[..f].iter().all(|&e| e >= DISSIPATION_THRESHOLD));
            prop_assert_eq!(failure_scan(&series[..=f]).dissipation_frame, Some(f));
        } else {
            prop_assert!(series.iter().all(|&e| e >= DISSIPATION_THRESHOLD));
        }
        if let Some(f) = a.explosion_frame {
            prop_assert!(series[..f].iter().all(|&e| e <= EXPLOSION_THRESHOLD));
            prop_assert_eq!(a.summary(), FailurePoint::Explosion(f));
        } else {
            prop_assert!(series.iter().all(|&e| e <= EXPLOSION_THRESHOLD));
        }
    }

    #[test]
    fn moments_and_energy_are_translation_invariant(sx in -3.0f64..3.0, sy in -3.0f64..3.0) {
        let blob = |x: [f64; 2]| (-((x[0] - 0.5).powi(2) + (x[1] - 0.4).powi(2)) / 0.01).exp();
        let d0 = unit_box::<2>(16);
        let d1 = GridDesc::new([16, 16], 1.0 / 16.0, [sx, sy]).unwrap();
        let shifted = |x: [f64; 2]| [x[0] - sx, x[1] - sy];
        let w0 = StaggeredField::from_fn(&d0, Layout::Vorticity, |_, x| blob(x));
        let w1 = StaggeredField::from_fn(&d1, Layout::Vorticity, |_, x| blob(shifted(x)));
        let u0 = StaggeredField::from_fn(&d0, Layout::Velocity, |c, x| blob(x) * (c + 1) as f64);
        let u1 = StaggeredField::from_fn(&d1, Layout::Velocity, |c, x| blob(shifted(x)) * (c + 1) as f64);
        for k in [2, 4] {
            let (a, b) = (vorticity_moment(&d0, &w0, k), vorticity_moment(&d1, &w1, k));
            prop_assert!((a - b).abs() <= 1e-10 * a.abs());
        }
        let (a, b) = (kinetic_energy(&d0, &u0, None), kinetic_energy(&d1, &u1, None));
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }
}

#[test]
fn identical_fields_have_zero_error() {
    let d = tg_desc(16);
    let w = taylor_green_omega(&d, 0.01, 0.3);
    assert_eq!(interior_error(&w.comps[0], &w.comps[0]), (0.0, 0.0));
    let v = taylor_green_omega(&d, 0.01, 0.0);
    let (l2, linf) = interior_error(&v.comps[0], &w.comps[0]);
    assert!(l2 > 0.0 && linf >= l2);
}

#[test]
fn synthetic_second_order_scheme() {
    let length = 2.0 * PI;
    let table = run_convergence::<()>(&[16, 32, 64, 128], length, |n| {
        let h = length / n as f64;
        Ok((0.7 * h * h * (1.0 + 0.1 * h), 2.1 * h * h))
    })
    .unwrap();
    assert_eq!(table.rows.len(), 4);
    assert_eq!(table.order_l2.len(), 3);
    for (o2, oi) in table.order_l2.iter().zip(&table.order_linf) {
        assert!((o2 - 2.0).abs() < 0.05, "{o2}");
        assert!((oi - 2.0).abs() < 1e-12);
    }
    let o = table.order_between(32, 128).unwrap();
    assert!((o - 2.0).abs() < 0.05);
    assert!(table.order_between(32, 256).is_none());
    let csv = table.to_csv();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("n,h,l2,linf,order_l2,order_linf\n16,"));
}

#[test]
fn convergence_errors_propagate() {
    let r = run_convergence(&[8, 16], 1.0, |n| if n == 16 { Err("boom") } else { Ok((1.0, 1.0)) });
    assert_eq!(r.unwrap_err(), "boom");
}

#[test]
fn taylor_green_state_starts_on_the_exact_field() {
    let setup = TaylorGreenSetup::default();
    let s = taylor_green_state(taylor_green_config(16, &setup)).unwrap();
    let (l2, linf) = taylor_green_error(&s);
    assert!(l2 < 1e-12 && linf < 1e-12, "{l2} {linf}");
    assert_eq!(s.config.n_long, 20);
    assert_eq!(s.config.cfl, 0.4);
}

#[test]
fn reference_table_parses() {
    let r100 = ghia_reference(100.0).unwrap();
    assert_eq!((r100.u_min, r100.v_max, r100.v_min), (-0.21090, 0.17527, -0.24533));
    let r400 = ghia_reference(400.0).unwrap();
    assert_eq!((r400.u_min, r400.v_max, r400.v_min), (-0.32726, 0.30203, -0.44993));
    let r1000 = ghia_reference(1000.0).unwrap();
    assert_eq!((r1000.u_min, r1000.v_max, r1000.v_min), (-0.38289, 0.37095, -0.51550));
    for r in [r100, r400, r1000] {
        assert!(r.lid_mid_vorticity.is_finite() && r.lid_mid_vorticity > 0.0);
    }
    assert!(r100.lid_mid_vorticity < r400.lid_mid_vorticity);
    assert!(r400.lid_mid_vorticity < r1000.lid_mid_vorticity);
    assert!(ghia_reference(500.0).is_none());
}

#[test]
fn probe_relative_error() {
    let r = ghia_reference(100.0).unwrap();
    let exact = CavityProbe {
        re: 100.0,
        lid_mid_vorticity: r.lid_mid_vorticity,
        v_min: r.v_min,
        v_max: r.v_max,
        u_min: r.u_min,
    };
    assert_eq!(exact.max_relative_error(&r), 0.0);
    let off = CavityProbe {
        v_max: r.v_max * 1.2,
        ..exact
    };
    assert!((off.max_relative_error(&r) - 0.2).abs() < 1e-12);
}

#[test]
fn coarse_cavity_probe_has_the_reference_shape() {
    let desc = unit_box::<2>(16);
    let mut cfg = SimConfig::new(desc);
    cfg.nu = 0.01;
    cfg.walls = WallVorticity::Thom { lid_speed: 1.0 };
    cfg.max_time = Some(4.0);
    let mut s = SimState::new(cfg, StaggeredField::zeros(&desc, Layout::Vorticity)).unwrap();
    s.run().unwrap();
    let p = cavity_probe(&s, 100.0);
    let r = ghia_reference(100.0).unwrap();
    assert_eq!(p.re, 100.0);
    // clockwise circulation: strong positive lid vorticity, return flow below
    assert!(p.lid_mid_vorticity > 3.0, "{p:?}");
    assert!(p.u_min < 0.0 && p.v_max > 0.0 && p.v_min < 0.0, "{p:?}");
    assert!(p.max_relative_error(&r) < 0.5, "{p:?}");
}

#[test]
fn slip_on_the_penalization_band() {
    use crate::solids::{voxelize, Pose, PoseTrack, ShapeKind, SolidShape};
    let d = unit_box::<2>(32);
    let fixed = SolidScene {
        shapes: vec![SolidShape::fixed(ShapeKind::Sphere { radius: 0.2 }, Pose::translation([0.5, 0.5, 0.0]))],
    };
    let m = voxelize(&fixed, &d, 0.0, 0.1);
    let stream = StaggeredField::from_fn(&d, Layout::Velocity, |_, _| 0.3);
    assert!((penalization_slip(&d, &stream, &m, &fixed, 0.0, 0.1) - 0.3).abs() < 1e-14);
    let rest = StaggeredField::zeros(&d, Layout::Velocity);
    assert_eq!(penalization_slip(&d, &rest, &m, &fixed, 0.0, 0.1), 0.0);
    assert_eq!(penalization_slip(&d, &stream, &SolidMasks::empty(&d), &SolidScene::default(), 0.0, 0.1), 0.0);

    // a fluid moving with the solid does not slip
    let start = Pose::translation([0.4, 0.5, 0.0]);
    let end = Pose::translation([0.6, 0.5, 0.0]);
    let moving = SolidScene {
        shapes: vec![SolidShape {
            kind: ShapeKind::Sphere { radius: 0.2 },
            track: PoseTrack {
                keys: vec![(0.0, start), (1.0, end)],
            },
        }],
    };
    let m = voxelize(&moving, &d, 0.5, 0.1);
    let carried = StaggeredField::from_fn(&d, Layout::Velocity, |c, _| if c == 0 { 0.2 } else { 0.0 });
    assert!(penalization_slip(&d, &carried, &m, &moving, 0.5, 0.1) < 1e-12);
}
