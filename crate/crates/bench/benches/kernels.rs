use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use stratlab::{
    evaluate_many, hardy_case, horizontal_gradient, integrate, random_field, sobolev_case,
    DiffMode, Field, GridSpec, QuadratureGrid, ScalarField, StratifiedGroup,
};

fn bench_gradient(c: &mut Criterion) {
    for name in ["euclidean3", "heisenberg2", "h1xr"] {
        let g = StratifiedGroup::builtin(name).unwrap();
        let f = random_field(&g, 1, 3).unwrap();
        let x: Vec<f64> = (0..g.dim()).map(|i| 0.4 + 0.1 * i as f64).collect();
        for mode in [DiffMode::Analytic, DiffMode::Fd] {
            c.bench_function(&format!("horizontal_gradient/{name}/{mode:?}"), |b| {
                b.iter(|| horizontal_gradient(&g, &f, black_box(&x), mode).unwrap())
            });
        }
    }
}

fn bench_quadrature(c: &mut Criterion) {
    for name in ["euclidean3", "heisenberg1"] {
        let g = StratifiedGroup::builtin(name).unwrap();
        let f = random_field(&g, 2, 3).unwrap();
        let grid = QuadratureGrid::new(&g, &GridSpec::default(), f.support()).unwrap();
        c.bench_function(&format!("integrate/{name}"), |b| {
            b.iter(|| integrate(|x| f.value(x).powi(2), black_box(&grid)).unwrap())
        });
    }
}

fn bench_evaluate(c: &mut Criterion) {
    let g = StratifiedGroup::heisenberg(1).unwrap();
    let f = random_field(&g, 3, 3).unwrap();
    let cases: Vec<_> = [1.5, 2.0, 3.0]
        .iter()
        .flat_map(|&p| {
            [
                sobolev_case(&g, p, 0.0).unwrap(),
                hardy_case(&g, p, 0.0).unwrap(),
            ]
        })
        .collect();
    let spec = GridSpec::default();
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    group.bench_function("heisenberg1/6-cases", |b| {
        b.iter(|| evaluate_many(black_box(&cases), &f, &spec).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_gradient, bench_quadrature, bench_evaluate);
criterion_main!(benches);
