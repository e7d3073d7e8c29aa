use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ghz_transfer::*;

fn dsl(c: &mut Criterion) {
    let p = PhysicalParams::transmon_preset();
    let text = serialize_schedule(&build_schedule(&p, 3, 1e-6).unwrap(), &SystemLayout::symmetric(3).unwrap());
    c.bench_function("parse", |b| b.iter(|| parse_schedule(black_box(&text)).unwrap()));
    let doc = parse_schedule(&text).unwrap();
    c.bench_function("validate", |b| b.iter(|| validate_schedule(black_box(&doc), &p).unwrap()));
    c.bench_function("build_schedule", |b| b.iter(|| build_schedule(black_box(&p), 3, 1e-6).unwrap()));
}

criterion_group!(benches, dsl);
criterion_main!(benches);
