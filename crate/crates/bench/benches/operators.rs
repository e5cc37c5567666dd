use criterion::{black_box, criterion_group, criterion_main, Criterion};
use tdr_bench::{medium, omega, stable_dt, stack, test1_field};
use tdr_core::basis::BasisSet;
use tdr_core::forward::Leapfrog;
use tdr_core::inverse::{QRConfig, QrSystem};
use tdr_core::ops::{FieldOps, H3Operator};

fn field_operators(c: &mut Criterion) {
    let g = omega();
    let ops = FieldOps::new(&g);
    let medium = medium();
    let v = test1_field();
    c.bench_function("curl_curl 20^3", |b| b.iter(|| ops.curl_curl(black_box(&v), &medium)));
    let h3 = H3Operator::new(&ops);
    c.bench_function("h3 apply 20^3", |b| b.iter(|| h3.apply(black_box(&v))));
    c.bench_function("neumann trace 20^3", |b| b.iter(|| ops.neumann_trace(black_box(&v))));
}

fn leapfrog(c: &mut Criterion) {
    let medium = medium();
    let scheme = Leapfrog::new(&medium, stable_dt()).unwrap();
    let state = scheme.bootstrap(&test1_field()).unwrap();
    c.bench_function("leapfrog step 20^3", |b| b.iter(|| scheme.step(black_box(state.clone())).unwrap()));
}

fn normal_operator(c: &mut Criterion) {
    let medium = medium();
    let basis = BasisSet::new(15, 2.5).unwrap();
    let system = QrSystem::new(&medium, &basis, QRConfig::default()).unwrap();
    let v = stack(16);
    let mut group = c.benchmark_group("normal");
    group.sample_size(10);
    group.bench_function("normal_apply 20^3 N=15", |b| b.iter(|| system.normal_apply(black_box(&v))));
    group.finish();
}

criterion_group!(benches, field_operators, leapfrog, normal_operator);
criterion_main!(benches);
