use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use xstune_core::cma::{optimize, CmaConfig, CmaState};

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn bench_cma(c: &mut Criterion) {
    c.bench_function("cma_generation_n30", |b| {
        let mut state = CmaState::new(&CmaConfig::new(vec![1.0; 30], 1.0).with_seed(1)).unwrap();
        b.iter(|| {
            let xs = state.ask().unwrap();
            let f: Vec<f64> = xs.iter().map(|x| sphere(x)).collect();
            state.tell(black_box(&xs), &f).unwrap();
        })
    });
    c.bench_function("cma_sphere_n10_2000_evals", |b| {
        let config = CmaConfig::new(vec![1.0; 10], 0.5).with_seed(3).with_max_evals(2000);
        b.iter(|| optimize(black_box(&config), sphere, false).unwrap().best_f)
    });
}

criterion_group!(benches, bench_cma);
criterion_main!(benches);
