use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, Criterion};
use genusflow_bench::fieldspec::Tape;
use genusflow_bench::geometry::standard_domain;
use genusflow_bench::topology::{iterate_region, Region};
use genusflow_bench::{integrate, ExprField, HPoint, IntegratorConfig, PoincareMap, State};
use std::hint::black_box;

const FX: &str = "(1 - cos(2*pi*y))/2 - 6*sin(2*pi*y)/(2*pi) + 0.05*cos(2*pi*x)";
const FY: &str = "3*sin(2*pi*y)/(2*pi) + 0.8*sin(2*pi*x)*(1 + cos(2*pi*t))*(1 - cos(2*pi*y))/2";

fn torus_field() -> ExprField {
    ExprField::parse(FX, FY).expect("benchmark field parses")
}

fn tape_eval(c: &mut Criterion) {
    let f = torus_field();
    let tape = Tape::compile(&[f.fx(), f.fy()]);
    let mut out = [0.0; 2];
    c.bench_function("tape_eval", |b| {
        b.iter(|| {
            tape.eval(black_box(0.3), black_box(0.7), black_box(0.1), &mut out);
            out
        })
    });
}

fn rk45_integrate(c: &mut Criterion) {
    let f = torus_field();
    let torus = standard_domain(1).expect("torus");
    let cfg = IntegratorConfig::rk45(1e-9, 1e-12);
    c.bench_function("rk45_integrate_10_periods", |b| {
        b.iter(|| integrate(&f, black_box(State::new(0.3, 0.5, 0.0)), 10.0, Some(&torus), &cfg).expect("integrates"))
    });
}

fn poincare_apply(c: &mut Criterion) {
    let f = torus_field();
    let torus = standard_domain(1).expect("torus");
    let pm = PoincareMap::new(&f, 1.0, Some(&torus)).expect("map");
    c.bench_function("poincare_apply", |b| b.iter(|| pm.apply(black_box(HPoint::new(0.3, 0.5))).expect("applies")));
}

fn small_iterate_region(c: &mut Criterion) {
    let f = |_x: f64, y: f64, t: f64| {
        [0.7 + 0.3 * (2.0 * PI * y).sin(), -(2.0 * PI * y).sin() + 0.1 * (2.0 * PI * t).cos()]
    };
    let torus = standard_domain(1).expect("torus");
    let pm = PoincareMap::new(&f, 1.0, Some(&torus)).expect("map").with_config(IntegratorConfig::rk4(1.0 / 32.0));
    let b0 = Region::from_fn(48, 48, torus.bounds(), |p| (p.y - 0.5).abs() > 0.1).expect("region");
    let mut group = c.benchmark_group("iterate_region");
    group.sample_size(10);
    group.bench_function("torus_48x48_n5", |b| b.iter(|| iterate_region(&pm, &b0, 5).expect("iterates")));
    group.finish();
}

criterion_group!(benches, tape_eval, rk45_integrate, poincare_apply, small_iterate_region);
criterion_main!(benches);
