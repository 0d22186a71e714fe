use std::f64::consts::{FRAC_PI_4, PI};

use proptest::prelude::*;
use robomag::alignment::{amplitude_schedule, similarity, DistanceRange, ScanGrid};
use robomag::environment::{
    box_mesh, check_collision, partition_pose_dictionary, path_feasible, Environment,
    FeasibilityStatus,
};
use robomag::kinematics::{forward_kinematics, inverse_kinematics, unit_normal};
use robomag::magnetostatics::{cylinder_field, dipole_field, equivalent_dipole, inverse_dipole};
use robomag::nvspin::{
    characteristic_roots, cubic_splitting, hamiltonian, normalize_splittings,
    polar_angle_from_resonances, resonances,
};
use robomag::{
    DhTable, FieldVector, JointConfig, MagnetSpec, NvParams, Pose, RobotBody, UnitVector, Vec3,
};

const GAMMA_E: f64 = 28.02495e9;

fn joints() -> impl Strategy<Value = JointConfig> {
    let dh = DhTable::nominal();
    let ranges: Vec<_> = dh.joints.iter().map(|r| r.q_min_rad..r.q_max_rad).collect();
    ranges.prop_map(|v| JointConfig([v[0], v[1], v[2], v[3], v[4], v[5]]))
}

fn direction() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, 0.0..2.0 * PI).prop_map(|(c, phi)| {
        let s = (1.0 - c * c).sqrt();
        Vec3::new(s * phi.cos(), s * phi.sin(), c)
    })
}

fn wall_env() -> Environment {
    Environment::new(vec![box_mesh(
        "wall",
        Vec3::new(0.25, -0.2, 0.0),
        Vec3::new(0.4, 0.2, 0.3),
    )
    .unwrap()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fk_rotation_is_orthonormal(q in joints()) {
        let r = DhTable::nominal().tcp_isometry(&q).rotation.to_rotation_matrix();
        let m = r.matrix();
        prop_assert!((m.determinant() - 1.0).abs() < 1e-10);
        for j in 0..3 {
            prop_assert!((m.column(j).norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ik_then_fk_is_identity(q in joints()) {
        let dh = DhTable::nominal();
        let target = forward_kinematics(&dh, &q).unwrap();
        if let Ok(sol) = inverse_kinematics(&dh, &target, &dh.home()) {
            let (dp, da) = forward_kinematics(&dh, &sol).unwrap().distance_to(&target);
            prop_assert!(dp < 1e-4 && da < 1e-3);
        }
    }

    #[test]
    fn unit_normal_has_unit_norm(ay in -10.0..10.0f64, az in -10.0..10.0f64) {
        prop_assert!((unit_normal(ay, az).as_vec().norm() - 1.0).abs() < 1e-12);
        prop_assert!(unit_normal(0.0, az).as_vec().z.abs() < 1e-15);
    }

    #[test]
    fn dipole_round_trip(dir_b in direction(), dir_r in direction(), log_b in -5.0..-1.0f64, r in 0.01..1.0f64) {
        let b = FieldVector::from(dir_b * 10f64.powf(log_b));
        let m = inverse_dipole(&b, dir_r * r).unwrap();
        let back = dipole_field(&m, dir_r * r).unwrap();
        prop_assert!((back - b).norm() / b.norm() < 1e-10);
    }

    #[test]
    fn dipole_decays_as_inverse_cube(dir_m in direction(), dir_r in direction(), d in 0.01..0.5f64) {
        let m = robomag::DipoleMoment::from(dir_m);
        let near = dipole_field(&m, dir_r * d).unwrap().norm();
        let far = dipole_field(&m, dir_r * 2.0 * d).unwrap().norm();
        prop_assert!((near / far - 8.0).abs() < 1e-12 * 8.0);
    }

    #[test]
    fn field_is_linear_in_magnetisation(dir in direction(), r in 0.03..0.3f64, k in 0.1..10.0f64) {
        let spec = MagnetSpec::nominal();
        let scaled = MagnetSpec { magnetisation: spec.magnetisation * k, ..spec };
        let pose = Pose::new(0.0, 0.0, 0.0, 0.2, -0.4, 1.0);
        let a = cylinder_field(&spec, &pose, dir * r).unwrap().as_vec() * k;
        let b = cylinder_field(&scaled, &pose, dir * r).unwrap().as_vec();
        prop_assert!((a - b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn far_field_deviation_shrinks_with_distance(dir in direction()) {
        let spec = MagnetSpec::nominal();
        let pose = Pose::new(0.1, -0.2, 0.05, 0.3, 0.2, -0.7);
        let dip = equivalent_dipole(&spec, &pose);
        let dev = |n: f64| {
            let r = dir * n * spec.outer_diameter();
            let exact = cylinder_field(&spec, &pose, pose.position() + r).unwrap().as_vec();
            (exact - dipole_field(&dip, r).unwrap().as_vec()).norm() / exact.norm()
        };
        let d: Vec<f64> = [5.0, 10.0, 20.0, 40.0].iter().map(|&n| dev(n)).collect();
        for w in d.windows(2) {
            prop_assert!(w[1] < w[0], "{d:?}");
        }
    }

    #[test]
    fn shrinking_never_creates_collisions(q in joints(), margin in 0.0..0.01f64) {
        let dh = DhTable::nominal();
        let body = RobotBody::nominal(&dh);
        let env = wall_env();
        let full = check_collision(&body, &dh, &q, &env);
        let small = check_collision(&body.shrunk(margin).unwrap(), &dh, &q, &env);
        if full.clear {
            prop_assert!(small.clear);
        }
        prop_assert_eq!(full.clear, full.min_distance.unwrap() > 0.0);
    }

    #[test]
    fn finer_path_sampling_is_conservative(a in joints(), b in joints()) {
        let dh = DhTable::nominal();
        let body = RobotBody::nominal(&dh);
        let env = wall_env();
        let coarse = path_feasible(&body, &dh, &a, &b, &env, 0.1);
        let fine = path_feasible(&body, &dh, &a, &b, &env, 0.05);
        if let (Ok(false), Ok(f)) = (coarse, fine) {
            prop_assert!(!f);
        }
    }

    #[test]
    fn similarity_is_symmetric_and_bounded(a in direction(), b in direction(), s in 0.0..20.0f64, d in 0.5..10.0f64) {
        let b1 = FieldVector::from(a * 1e-3);
        let b2 = FieldVector::from(b * s * 1e-3);
        let s12 = similarity(&b1, &b2, d).unwrap();
        prop_assert_eq!(s12, similarity(&b2, &b1, d).unwrap());
        prop_assert!(s12 > 0.0 && s12 <= 1.0);
        let further = FieldVector::from(b1.as_vec() + (b2 - b1).as_vec() * 1.5);
        if (b2 - b1).norm() > 0.0 {
            prop_assert!(similarity(&b1, &further, d).unwrap() < s12 || s12 == 0.0);
        }
    }

    #[test]
    fn inverse_dipole_direction_is_exact_for_dipoles(target in direction(), dir_r in direction(), r in 0.05..0.5f64) {
        let b = FieldVector::from(target * 2e-3);
        let m = inverse_dipole(&b, dir_r * r).unwrap();
        let mhat = UnitVector::new(m.as_vec()).unwrap().as_vec();
        let unit_moment = robomag::DipoleMoment::from(mhat);
        let achieved = dipole_field(&unit_moment, dir_r * r).unwrap().as_vec();
        let angle = achieved.cross(&target).norm().atan2(achieved.dot(&target));
        prop_assert!(angle < 1e-10);
    }

    #[test]
    fn schedule_is_monotone(start in 0.5..3.0f64, span in 0.5..5.0f64) {
        let spec = MagnetSpec::nominal();
        let dir = UnitVector::new(Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let targets: Vec<f64> = (0..8).map(|i| (start + span * i as f64 / 7.0) * 1e-3).collect();
        let s = amplitude_schedule(&targets, &spec, &dir, Vec3::new(0.3, 0.1, 0.15), 0.5e-3, &DistanceRange::for_magnet(&spec)).unwrap();
        for w in s.achieved.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn meander_is_a_bijection(ny in 1usize..12, nz in 1usize..12) {
        let mut grid = ScanGrid::one_eighth(2);
        grid.alpha_y.count = ny;
        grid.alpha_z.count = nz;
        let mut seen = vec![false; ny * nz];
        let order = grid.meander();
        prop_assert_eq!(order.len(), ny * nz);
        for (r, c) in order {
            prop_assert!(!seen[r * nz + c]);
            seen[r * nz + c] = true;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cubic_matches_eigensolver(d in 2.5e9..3.2e9f64, pi in 0.0..20e6f64, b in 0.0..10e-3f64, gamma in 0.0..PI) {
        let p = NvParams { d, pi, ..NvParams::default() };
        let field = FieldVector::new(b * gamma.sin() * FRAC_PI_4.cos(), b * gamma.sin() * FRAC_PI_4.sin(), b * gamma.cos());
        let (mut eig, _) = hamiltonian(&p, &field).eigen();
        eig.sort_by(f64::total_cmp);
        let roots = characteristic_roots(d, pi, GAMMA_E * b, gamma).unwrap();
        for (x, e) in roots.iter().zip(eig.iter()) {
            prop_assert!((x + 2.0 * d / 3.0 - e).abs() / d < 1e-6);
        }
    }

    #[test]
    fn splitting_is_monotone_in_aligned_field(pi in 0.0..20e6f64, b in 0.0..10e-3f64, db in 1e-6..1e-3f64) {
        let s1 = cubic_splitting(2.87e9, pi, GAMMA_E * b, 0.0).unwrap();
        let s2 = cubic_splitting(2.87e9, pi, GAMMA_E * (b + db), 0.0).unwrap();
        prop_assert!(s2 >= s1);
    }

    #[test]
    fn polar_inversion_round_trip(b in 0.5e-3..10e-3f64, theta in 0.05..1.5f64) {
        let p = NvParams::default();
        // transverse azimuth of 45° in the NV frame, where the cubic is exact
        let t = b * theta.sin() * FRAC_PI_4.cos();
        let field = FieldVector::new(t, t, b * theta.cos());
        let r = resonances(&p, &field).unwrap();
        let back = polar_angle_from_resonances(r.f_minus, r.f_plus, p.d, p.pi, p.gamma_e).unwrap();
        prop_assert!((back.b_magnitude - b).abs() < 10e-6);
        prop_assert!((back.theta - theta).abs() < 0.1f64.to_radians());
    }

    #[test]
    fn normalisation_is_identity_for_equal_magnitudes(v in prop::collection::vec(1e6..1e8f64, 1..10), b in 1e-4..1e-2f64) {
        let out = normalize_splittings(&v, &vec![b; v.len()]).unwrap();
        prop_assert_eq!(out, v);
    }
}

#[test]
fn partition_is_deterministic() {
    let dh = DhTable::nominal();
    let body = RobotBody::nominal(&dh);
    let env = wall_env();
    let poses: Vec<Pose> = (0..12)
        .map(|i| {
            robomag::kinematics::magnet_pose_for_field_direction(
                Vec3::new(0.3, 0.1, 0.15),
                0.1 * i as f64,
                0.12 * i as f64,
                0.1,
            )
        })
        .collect();
    let a = partition_pose_dictionary(&poses, &dh, &body, &env, &dh.home());
    let b = partition_pose_dictionary(&poses, &dh, &body, &env, &dh.home());
    assert_eq!(a, b);
    assert!(a.iter().any(|p| p.status == FeasibilityStatus::Reachable));
}

#[test]
fn zero_field_splitting_is_twice_pi() {
    let p = NvParams::default();
    let r = resonances(&p, &FieldVector::ZERO).unwrap();
    // exact up to rounding of GHz-scale roots (about 1e-14 relative)
    assert!((r.splitting - 2.0 * p.pi).abs() < 1e-3);
    let s = cubic_splitting(p.d, p.pi, 0.0, 0.0).unwrap();
    assert!((s - 2.0 * p.pi).abs() < 1e-3);
}
