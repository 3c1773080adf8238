//! One worker thread against the full rayon pool on the two hot paths: a
//! batch of linear propagations and a short semilinear integration.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sigma_damped::norms::log_spaced;
use sigma_damped::par;
use sigma_damped::propagator::propagate_linear_spectral;
use sigma_damped::semilinear::{run_semilinear, SemilinearConfig};
use sigma_damped::{make_grid, to_spectral, Field};

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let full = rayon::current_num_threads();
    let mut sizes = vec![1];
    if full > 1 {
        sizes.push(full);
    }
    sizes
        .into_iter()
        .map(|n| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool");
            (format!("{n}_threads"), pool)
        })
        .collect()
}

fn linear_batch(c: &mut Criterion) {
    let grid = make_grid(2, 256, 80.0).unwrap();
    let u0 = to_spectral(&Field::gaussian(&grid, 1.0, 1.0));
    let u1 = to_spectral(&Field::gaussian(&grid, 0.5, 2.0));
    let times = log_spaced(1.0, 100.0, 16);
    let mut group = c.benchmark_group("linear_propagation_2d_256");
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&label), |b| {
            b.iter(|| {
                pool.install(|| par::map(&times, |&t| propagate_linear_spectral(&u0, &u1, 1.0, t, 0, 0.0).unwrap().l2_norm()))
            })
        });
    }
    group.finish();
}

fn semilinear_short(c: &mut Criterion) {
    let grid = make_grid(2, 128, 40.0).unwrap();
    let u0 = Field::gaussian(&grid, 0.1, 1.0);
    let u1 = Field::zeros(&grid);
    let mut cfg = SemilinearConfig::new(grid, 1.0, 3.0).with_schedule(0.5, 2.0, 4);
    cfg.keep_snapshots = false;
    let mut group = c.benchmark_group("semilinear_2d_128");
    group.sample_size(10);
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&label), |b| {
            b.iter(|| pool.install(|| run_semilinear(&u0, &u1, &cfg).unwrap().steps))
        });
    }
    group.finish();
}

criterion_group!(benches, linear_batch, semilinear_short);
criterion_main!(benches);
