//! Throughput of the data-parallel kernels.
//!
//! With the default `parallel` feature each kernel runs on a one-thread pool
//! and on the full pool; `cargo bench --no-default-features` measures the
//! sequential build under the same names for comparison.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use htdp::instances::{student_t_coordwise, QuadraticLoss, SampleSource};
use htdp::meanest::{hdme, nsme, HdmeConfig, NsmeConfig};
use htdp::sco::{cdp_sco_convex_hdme, Ball, DriverOptions};
use htdp::{Dataset, RngStream};

fn dataset(n: usize, d: usize) -> Dataset {
    student_t_coordwise(2.0, d, vec![0.0; d])
        .unwrap()
        .sample_dataset(n, &RngStream::new(1).child("bench"))
        .unwrap()
}

#[cfg(feature = "parallel")]
fn modes() -> Vec<(String, Option<rayon::ThreadPool>)> {
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    let threads = all.current_num_threads();
    let mut modes = vec![("rayon-1".to_string(), Some(one))];
    // On a single core the full pool is the one-thread pool.
    if threads > 1 {
        modes.push((format!("rayon-{threads}"), Some(all)));
    }
    modes
}

#[cfg(not(feature = "parallel"))]
fn modes() -> Vec<(String, Option<()>)> {
    vec![("sequential".into(), None)]
}

#[cfg(feature = "parallel")]
fn within<R: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    pool.as_ref()
        .expect("parallel modes carry a pool")
        .install(f)
}

#[cfg(not(feature = "parallel"))]
fn within<R>(_: &Option<()>, f: impl FnOnce() -> R) -> R {
    f()
}

fn estimators(c: &mut Criterion) {
    let (n, d) = (1 << 16, 8);
    let data = dataset(n, d);
    let hcfg = HdmeConfig::new(40.0, 0.1).unwrap();
    let ncfg = NsmeConfig::new(40.0).unwrap();
    let mut group = c.benchmark_group("estimators");
    group.throughput(Throughput::Elements((n * d) as u64));
    for (label, pool) in modes() {
        group.bench_function(BenchmarkId::new("hdme", &label), |b| {
            b.iter(|| within(&pool, || hdme(&data, &hcfg).unwrap()))
        });
        group.bench_function(BenchmarkId::new("nsme", &label), |b| {
            b.iter(|| within(&pool, || nsme(&data, &ncfg).unwrap()))
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let (n, d) = (1 << 16, 8);
    let dist = student_t_coordwise(2.0, d, vec![0.0; d]).unwrap();
    let stream = RngStream::new(2);
    let mut group = c.benchmark_group("sampling");
    group.throughput(Throughput::Elements((n * d) as u64));
    for (label, pool) in modes() {
        group.bench_function(BenchmarkId::new("student_t", &label), |b| {
            b.iter(|| within(&pool, || dist.sample_dataset(n, &stream).unwrap()))
        });
    }
    group.finish();
}

fn sco(c: &mut Criterion) {
    let n = 1 << 14;
    let mu = vec![0.9, -0.45];
    let data = student_t_coordwise(2.0, 2, mu.clone())
        .unwrap()
        .sample_dataset(n, &RngStream::new(3))
        .unwrap();
    let loss = QuadraticLoss::new(Ball::origin(2, 0.1).unwrap(), mu, 2.0).unwrap();
    let opts = DriverOptions {
        beta: 0.9,
        ..Default::default()
    };
    let mut group = c.benchmark_group("sco");
    group.sample_size(10);
    for (label, pool) in modes() {
        group.bench_function(BenchmarkId::new("convex_hdme", &label), |b| {
            b.iter(|| {
                within(&pool, || {
                    cdp_sco_convex_hdme(&data, &loss, 1.0, &opts, &RngStream::new(4)).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, estimators, sampling, sco);
criterion_main!(benches);
