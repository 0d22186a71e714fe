use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};
use robomag::alignment::{sphere_segment_scan, ScanGrid};
use robomag::config::ResolvedConfig;
use robomag::environment::check_collision;
use robomag::kinematics::{forward_kinematics, inverse_kinematics};
use robomag::magnetostatics::cylinder_field;
use robomag::nvspin::{characteristic_roots, hamiltonian, DEFAULT_GAMMA_E};
use robomag::{DhTable, FieldVector, JointConfig, MagnetSpec, NvParams, Pose, Vec3};

fn field(c: &mut Criterion) {
    let spec = MagnetSpec::nominal();
    let pose = Pose::new(0.3, 0.1, 0.21, 0.0, 0.4, -0.7);
    let p = Vec3::new(0.3, 0.1, 0.15);
    c.bench_function("cylinder_field", |b| {
        b.iter(|| cylinder_field(&spec, black_box(&pose), black_box(p)))
    });
    c.bench_function("sphere_segment_scan 19x19", |b| {
        b.iter(|| sphere_segment_scan(p, &ScanGrid::one_eighth(19), 0.06, &spec, Some(5e-4)))
    });
}

fn kinematics(c: &mut Criterion) {
    let dh = DhTable::nominal();
    let q = JointConfig([0.3, -0.2, 0.4, 0.5, -0.6, 0.7]);
    let target = forward_kinematics(&dh, &q).expect("within limits");
    c.bench_function("forward_kinematics", |b| {
        b.iter(|| forward_kinematics(&dh, black_box(&q)))
    });
    c.bench_function("inverse_kinematics from home", |b| {
        b.iter(|| inverse_kinematics(&dh, black_box(&target), &dh.home()))
    });
}

fn spin(c: &mut Criterion) {
    let p = NvParams::default();
    let bfield = FieldVector::new(2e-3, 2e-3, 3e-3);
    let beta = DEFAULT_GAMMA_E * bfield.norm();
    c.bench_function("characteristic_roots", |b| {
        b.iter(|| characteristic_roots(p.d, p.pi, black_box(beta), black_box(0.9)))
    });
    c.bench_function("hamiltonian eigen", |b| {
        b.iter(|| hamiltonian(&p, black_box(&bfield)).eigen())
    });
}

fn collision(c: &mut Criterion) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/walled/run.toml");
    let cfg = ResolvedConfig::load(&path).expect("walled fixture loads");
    let env = cfg.environment().expect("walled environment loads");
    let q = JointConfig([0.2, 0.1, 0.3, 0.0, 0.5, 0.0]);
    c.bench_function("check_collision walled", |b| {
        b.iter(|| check_collision(&cfg.body, &cfg.dh, black_box(&q), &env))
    });
}

criterion_group!(benches, field, kinematics, spin, collision);
criterion_main!(benches);
