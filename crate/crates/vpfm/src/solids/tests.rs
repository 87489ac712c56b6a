use super::*;
use crate::grid::StaggeredArray;

fn unit2(n: usize) -> GridDesc<f64, 2> {
    GridDesc::unit([n, n], 1.0).unwrap()
}

fn unit3(n: usize) -> GridDesc<f64, 3> {
    GridDesc::unit([n, n, n], 1.0).unwrap()
}

fn sphere_at(c: [f64; 3], r: f64) -> SolidShape<f64> {
    SolidShape::fixed(ShapeKind::Sphere { radius: r }, Pose::translation(c))
}

#[test]
fn empty_scene_is_all_fluid() {
    let d = unit3(8);
    let m = voxelize(&SolidScene::default(), &d, 0.0, 0.1);
    assert!(!m.any_solid());
    assert!(m.chi_surf.iter().chain(&m.chi_in).all(|v| !v));
    assert!(m.alpha.comps.iter().flat_map(|c| &c.data).all(|v| *v == 1.0));
    assert_eq!(m.u_sn.max_abs(), 0.0);
}

#[test]
fn grid_aligned_half_space() {
    let d = unit3(16);
    let scene = SolidScene {
        shapes: vec![SolidShape::fixed(
            ShapeKind::HalfSpace { normal: [1.0, 0.0, 0.0] },
            Pose::translation([0.5, 0.0, 0.0]),
        )],
    };
    let m = voxelize(&scene, &d, 0.0, 0.1);
    assert!(m.alpha.comps.iter().flat_map(|c| &c.data).all(|v| *v == 0.0 || *v == 1.0));
    for_each_index(d.cells, |c, i| {
        assert_eq!(m.chi_s[c], i[0] < 8);
        assert_eq!(m.chi_surf[c], i[0] == 7);
        assert_eq!(m.chi_in[c], i[0] < 7);
    });
}

#[test]
fn sphere_volume_from_occupancy() {
    let d = unit3(32);
    let r = 8.0 * d.dx;
    let scene = SolidScene {
        shapes: vec![sphere_at([0.51, 0.49, 0.5], r)],
    };
    let m = voxelize(&scene, &d, 0.0, 0.1);
    let vol = m.chi_s.iter().filter(|v| **v).count() as f64 * d.dx.powi(3);
    let exact = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    assert!((vol - exact).abs() < 0.05 * exact, "{vol} vs {exact}");
}

#[test]
fn mask_consistency_on_sphere() {
    let d = unit3(24);
    let scene = SolidScene {
        shapes: vec![sphere_at([0.5, 0.53, 0.47], 0.2)],
    };
    let m = voxelize(&scene, &d, 0.0, 0.1);
    for c in 0..d.num_cells() {
        assert!(!(m.chi_in[c] && m.chi_surf[c]));
        assert_eq!(m.chi_in[c], m.chi_s[c] && !m.chi_surf[c]);
        assert!(!m.chi_surf[c] || m.chi_s[c]);
    }
    let mut partial = 0;
    for a in 0..3 {
        let arr = &m.alpha.comps[a];
        for k in 0..arr.data.len() {
            let v = arr.data[k];
            assert!((0.0..=1.0).contains(&v));
            if v > 0.0 && v < 1.0 {
                partial += 1;
                let idx = arr.multi_index(k);
                let mut l = idx;
                l[a] -= 1;
                let owners = [cell_index(&d.cells, &l), cell_index(&d.cells, &idx)];
                // a surface grazing a face between two fluid centres cuts it
                // without making either cell solid
                let grazing = owners.iter().all(|&c| !m.chi_s[c]);
                assert!(grazing || owners.iter().any(|&c| m.chi_surf[c]), "cut face {idx:?} has no surface cell");
            }
        }
    }
    assert!(partial > 100);
    // far faces fully open, deep faces fully closed
    assert_eq!(m.alpha.comps[0].get([1, 1, 1]), 1.0);
    assert_eq!(m.alpha.comps[0].get([12, 12, 11]), 0.0);
}

#[test]
fn face_fraction_examples() {
    let far = |_: [f64; 3]| 1.0;
    assert_eq!(face_fraction(far, [0.5; 3], 0, 0.1, 4), 1.0);
    // plane x + y = 0 through the centre of a z-face
    let cut = |q: [f64; 3]| q[0] - 0.5;
    assert_eq!(face_fraction(cut, [0.5, 0.5, 0.5], 2, 0.1, 4), 0.5);
    // a slanted cut leaving 7 of the 16 samples in the fluid
    let h = 0.1;
    let c = [0.3, 0.4, 0.5];
    let s = |v: f64| ((v / h) + 0.5) * 4.0 - 0.5;
    let fig = |q: [f64; 3]| 6.5 - (3.0 * s(q[1] - c[1]) + 2.0 * s(q[2] - c[2]));
    assert_eq!(face_fraction(fig, c, 0, h, 4), 7.0 / 16.0);
    // planar edges use 4 samples
    let half2 = |q: [f64; 2]| q[1] - 0.5;
    assert_eq!(face_fraction(half2, [0.3, 0.5], 0, 0.1, 4), 0.5);
}

#[test]
fn pose_interpolation() {
    let a = Pose::<f64>::identity();
    let b = Pose::from_axis_angle([1.0, 2.0, 0.0], [0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2);
    let m = a.interpolate(&b, 0.5);
    assert!((m.translation[0] - 0.5).abs() < 1e-15 && (m.translation[1] - 1.0).abs() < 1e-15);
    let x = m.apply([1.0, 0.0, 0.0]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((x[0] - (0.5 + s)).abs() < 1e-12 && (x[1] - (1.0 + s)).abs() < 1e-12);
    let back = b.inverse_apply(b.apply([0.3, -0.2, 0.9]));
    assert!((back[0] - 0.3).abs() < 1e-12 && (back[1] + 0.2).abs() < 1e-12 && (back[2] - 0.9).abs() < 1e-12);
    let track = PoseTrack {
        keys: vec![(0.0, a), (2.0, b)],
    };
    assert_eq!(track.at(-1.0), a);
    assert_eq!(track.at(3.0), b);
    assert!((track.at(1.0).translation[1] - 1.0).abs() < 1e-15);
}

#[test]
fn translating_solid_face_velocities() {
    let d = unit3(16);
    let v = [0.3, -0.1, 0.05];
    let p0 = Pose::translation([0.4, 0.5, 0.5]);
    let p1 = Pose::translation([0.4 + v[0], 0.5 + v[1], 0.5 + v[2]]);
    let shape = SolidShape {
        kind: ShapeKind::Sphere { radius: 0.2 },
        track: PoseTrack {
            keys: vec![(0.0, p0), (1.0, p1)],
        },
    };
    let scene = SolidScene { shapes: vec![shape] };
    let m = voxelize(&scene, &d, 0.5, 0.05);
    let mut checked = 0;
    for a in 0..3 {
        let al = &m.alpha.comps[a];
        for k in 0..al.data.len() {
            if al.data[k] < 1.0 {
                assert!((m.u_sn.comps[a].data[k] - v[a]).abs() < 1e-10);
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
    for c in 0..d.num_cells() {
        if m.chi_s[c] {
            assert!((0..3).all(|a| (m.u_st[c][a] - v[a]).abs() < 1e-10));
        }
    }
}

#[test]
fn rotating_disk_velocity_is_rigid() {
    let om = 2.0;
    let c = [0.5, 0.5, 0.0];
    let shape = SolidShape {
        kind: ShapeKind::Disk { radius: 0.2 },
        track: PoseTrack {
            keys: vec![
                (0.0, Pose::from_axis_angle(c, [0.0, 0.0, 1.0], 0.0)),
                (1.0, Pose::from_axis_angle(c, [0.0, 0.0, 1.0], om)),
            ],
        },
    };
    let scene = SolidScene { shapes: vec![shape] };
    let dt = 1e-3;
    let p: [f64; 2] = [0.6, 0.55];
    let v = scene.velocity(p, 0.5, dt);
    let exact = [-om * (p[1] - 0.5), om * (p[0] - 0.5)];
    for a in 0..2 {
        assert!((v[a] - exact[a]).abs() < 1e-3, "{v:?} {exact:?}");
    }
}

fn masks_with_solid<const D: usize>(d: &GridDesc<f64, D>, solid: &[[usize; D]]) -> SolidMasks<f64, D> {
    let mut m = SolidMasks::empty(d);
    for c in solid {
        m.chi_s[cell_index(&d.cells, c)] = true;
    }
    m
}

#[test]
fn penalization_saturation_and_single_neighbor_3d() {
    let d = unit3(8);
    let big_u = 0.7;
    let u = StaggeredField::from_fn(&d, Layout::Velocity, |c, _| if c == 0 { big_u } else { 0.0 });
    // x-face at index (4, 4, 4) sits between cells (3,4,4) and (4,4,4)
    let mut ring = Vec::new();
    for i in [3, 4] {
        ring.extend([[i, 3, 4], [i, 5, 4], [i, 4, 3], [i, 4, 5]]);
    }
    let m = masks_with_solid(&d, &ring);
    let pen = penalization_velocity(&d, &u, &m);
    assert!((pen.comps[0].get([4, 4, 4]) + big_u).abs() < 1e-15);
    let m1 = masks_with_solid(&d, &ring[..1]);
    let pen1 = penalization_velocity(&d, &u, &m1);
    assert!((pen1.comps[0].get([4, 4, 4]) + big_u / 8.0).abs() < 1e-15);
    // at rest everywhere: nothing to correct
    let rest = StaggeredField::zeros(&d, Layout::Velocity);
    assert_eq!(penalization_velocity(&d, &rest, &m).max_abs(), 0.0);
}

#[test]
fn penalization_saturation_2d() {
    let d = unit2(8);
    let u = StaggeredField::from_fn(&d, Layout::Velocity, |c, _| if c == 1 { -0.4 } else { 0.0 });
    // y-face (4, 4) between cells (4,3) and (4,4); neighbours offset in x
    let m = masks_with_solid(&d, &[[3, 3], [5, 3], [3, 4], [5, 4]]);
    let pen = penalization_velocity(&d, &u, &m);
    assert!((pen.comps[1].get([4, 4]) - 0.4).abs() < 1e-15);
    let m1 = masks_with_solid(&d, &[[3, 3]]);
    let pen1 = penalization_velocity(&d, &u, &m1);
    assert!((pen1.comps[1].get([4, 4]) - 0.1).abs() < 1e-15);
}

#[test]
fn penalization_is_local_to_band() {
    let d = unit3(16);
    let scene = SolidScene {
        shapes: vec![sphere_at([0.5; 3], 0.22)],
    };
    let m = voxelize(&scene, &d, 0.0, 0.1);
    let u = StaggeredField::from_fn(&d, Layout::Velocity, |c, p| (c as f64 + 1.0) * (p[0] + 0.3 * p[1]));
    let pen = penalization_velocity(&d, &u, &m);
    let band = penalization_band(&d, &m);
    let mut inside = 0;
    for a in 0..3 {
        for (k, v) in pen.comps[a].data.iter().enumerate() {
            if *v != 0.0 {
                assert!(band[a][k]);
                inside += 1;
            }
        }
    }
    assert!(inside > 0);
}

#[test]
fn penalization_vorticity_of_wall_shear() {
    let n = 16;
    let d = unit2(n);
    let scene = SolidScene {
        shapes: vec![SolidShape::fixed(
            ShapeKind::HalfSpace { normal: [0.0, 1.0, 0.0] },
            Pose::translation([0.0, 0.25, 0.0]),
        )],
    };
    let m = voxelize(&scene, &d, 0.0, 0.1);
    let big_u = 1.0;
    let u = StaggeredField::from_fn(&d, Layout::Velocity, |c, _| if c == 0 { big_u } else { 0.0 });
    let pen = penalization_velocity(&d, &u, &m);
    let lam = 3.0;
    let w = penalization_vorticity(&d, &pen, lam);
    // dense oracle
    let h = d.dx;
    let mut oracle = StaggeredArray::<f64, 2>::zeros(&d, [false, false]);
    for j in 1..n {
        for i in 1..n {
            let dv = pen.comps[1].get([i, j]) - pen.comps[1].get([i - 1, j]);
            let du = pen.comps[0].get([i, j]) - pen.comps[0].get([i, j - 1]);
            oracle.set([i, j], lam * (dv - du) / h);
        }
    }
    for k in 0..oracle.data.len() {
        assert!((oracle.data[k] - w.comps[0].data[k]).abs() < 1e-12);
    }
    // first fluid row is j = 4; the band sits on its x-faces
    let j0 = 4;
    for i in 1..n {
        assert!(w.comps[0].get([i, j0 + 1]) < 0.0, "fluid-side node should carry the boundary-layer sign");
        assert!(w.comps[0].get([i, j0]) > 0.0);
        for j in (1..n).filter(|j| *j != j0 && *j != j0 + 1) {
            assert_eq!(w.comps[0].get([i, j]), 0.0);
        }
    }
    assert_eq!(penalization_vorticity(&d, &pen, 0.0).max_abs(), 0.0);
    let w2 = penalization_vorticity(&d, &pen, 2.0 * lam);
    for k in 0..w.comps[0].data.len() {
        assert_eq!(w2.comps[0].data[k], 2.0 * w.comps[0].data[k]);
    }
    let zero = StaggeredField::zeros(&d, Layout::Velocity);
    assert_eq!(penalization_vorticity(&d, &zero, lam).max_abs(), 0.0);
}
