use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use specmap::linalg::{c, CMatrix, CVector};
use specmap::synth::{calibrate_theta, extended_frame, grassmannian_map, theta_map, theta_map_spec, Domain};
use specmap::theta::{riemann_theta, ThetaParams};
use specmap::{fixtures, Tolerances};

fn theta_eval(cr: &mut Criterion) {
    let tau = CMatrix::from_row_slice(2, 2, &[c(0.1, 1.2), c(0.3, 0.2), c(0.3, 0.2), c(-0.2, 0.9)]);
    let params = ThetaParams::new(tau, 1e-12).unwrap();
    let z = CVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.4)]);
    cr.bench_function("theta_genus2", |b| b.iter(|| riemann_theta(black_box(&z), &params).unwrap()));
}

fn g0_synth(cr: &mut Criterion) {
    let data = fixtures::g0().spectral_data().unwrap();
    let domain = Domain::new(-1.0, 1.0, -1.0, 1.0, 64, 64);
    cr.bench_function("g0_frame", |b| b.iter(|| extended_frame(black_box(&data)).unwrap()));
    let frame = extended_frame(&data).unwrap();
    cr.bench_function("g0_map_64x64", |b| b.iter(|| grassmannian_map(&frame, &data, black_box(&domain))));
}

fn delaunay_theta(cr: &mut Criterion) {
    let data = fixtures::delaunay().spectral_data().unwrap();
    let (spec, _) = theta_map_spec(&data, &Tolerances::default()).unwrap();
    let cal = calibrate_theta(&spec, &Domain::centered(2.25, 0.8, 5e-3, 3), 1e-4).unwrap();
    let domain = Domain::new(0.0, 4.5, 0.0, 1.6, 32, 16);
    cr.bench_function("delaunay_theta_map_32x16", |b| b.iter(|| theta_map(&spec, &cal.c, black_box(&domain)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = theta_eval, g0_synth, delaunay_theta
}
criterion_main!(benches);
