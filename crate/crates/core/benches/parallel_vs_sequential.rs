use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use siegel_theta::characteristics::enumerate_index_classes;
use siegel_theta::symplectic::{bfs_group, standard_sp_generators, DEFAULT_GROUP_BUDGET};
use siegel_theta::theta_num::{big_theta_vec, Precision, SiegelPoint};
use siegel_theta::verify::{cmd_primitivity, RunConfig};
use siegel_theta::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn batch_big_theta(c: &mut Criterion) {
    let classes = enumerate_index_classes(2, 5).unwrap();
    let z = SiegelPoint::random(2, &mut ChaCha8Rng::seed_from_u64(3));
    let prec = Precision::default();
    let mut group = c.benchmark_group("big_theta_batch_g2_n5");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| big_theta_vec(black_box(&classes), &z, &prec, exec).unwrap())
        });
    }
    group.finish();
}

fn group_closure(c: &mut Criterion) {
    let gens = standard_sp_generators(2);
    let mut group = c.benchmark_group("sp4_bfs_n3");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| bfs_group(2, 3, black_box(&gens), DEFAULT_GROUP_BUDGET, exec).unwrap())
        });
    }
    group.finish();
}

fn primitivity(c: &mut Criterion) {
    let mut group = c.benchmark_group("primitivity_g2_n5");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    for (name, exec) in MODES {
        let cfg = RunConfig {
            exec,
            ..RunConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| cmd_primitivity(black_box(&cfg)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, batch_big_theta, group_closure, primitivity);
criterion_main!(benches);
