//! Parallel vs sequential execution of the data-parallel hot loops:
//! stiffness-row integration, Gramian assembly, and kernel tabulation.
//!
//! The parallel path goes through `par::map_indexed` (rayon); the sequential
//! twin is `par::map_indexed_seq`. Outputs are bitwise identical, so the
//! comparison is purely about throughput. Thread count follows
//! `RAYON_NUM_THREADS`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fraclab::operator::{assemble_operator, toeplitz_integral, FracOrder, IntervalDomain, Mesh};
use fraclab::par;
use fraclab::spectral::{SpectralModel, DEFAULT_FIT_NODES};
use fraclab::transmute::{kernel_derivatives, KernelSpec};
use fraclab::wave::{int_cos_cos, int_cos_sin, int_sin_sin};

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("stiffness_row");
    for &n in &[1024usize, 4096] {
        let entry = move |k: usize| toeplitz_integral(k, 0.75);
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| par::map_indexed(n, entry))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| par::map_indexed_seq(n, entry))
        });
    }
    group.finish();

    let mut full = c.benchmark_group("assemble_operator");
    full.sample_size(10);
    for &n in &[512usize] {
        full.bench_with_input(BenchmarkId::new("feature_selected", n), &n, |b, &n| {
            let domain = IntervalDomain::new(0.0, 1.0).unwrap();
            let mesh = Mesh::uniform(domain, n).unwrap();
            let s = FracOrder::new(0.75).unwrap();
            b.iter(|| assemble_operator(domain, &mesh, s).unwrap())
        });
    }
    full.finish();
}

fn bench_gramian_entries(c: &mut Criterion) {
    let domain = IntervalDomain::new(0.0, 1.0).unwrap();
    let mesh = Mesh::uniform(domain, 192).unwrap();
    let op = assemble_operator(domain, &mesh, FracOrder::new(0.75).unwrap()).unwrap();
    let model = SpectralModel::build(&op, 16, DEFAULT_FIT_NODES).unwrap();
    let lam: Vec<f64> = model.lambda().to_vec();
    let j = 16usize;
    let horizon = 4.0;
    let entry = move |flat: usize| {
        let i = flat / j;
        let k = flat % j;
        let wi = lam[i].sqrt();
        let wk = lam[k].sqrt();
        int_cos_cos(wi, wk, horizon) + int_sin_sin(wi, wk, horizon) + int_cos_sin(wi, wk, horizon)
    };
    let mut group = c.benchmark_group("gramian_entries");
    group.bench_function("parallel", |b| b.iter(|| par::map_indexed(j * j, entry)));
    group.bench_function("sequential", |b| b.iter(|| par::map_indexed_seq(j * j, entry)));
    group.finish();
}

fn bench_kernel_table(c: &mut Criterion) {
    let spec = KernelSpec::new(2.0, 1.0, 3.0, 24).unwrap();
    let times: Vec<f64> = (1..64).map(|i| 2.0 * i as f64 / 64.0).collect();
    let entry = move |i: usize| {
        kernel_derivatives(&spec, times[i], 24)
            .map(|d| d.scaled[24])
            .unwrap_or(0.0)
    };
    let mut group = c.benchmark_group("kernel_derivative_table");
    group.bench_function("parallel", |b| b.iter(|| par::map_indexed(63, entry)));
    group.bench_function("sequential", |b| b.iter(|| par::map_indexed_seq(63, entry)));
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_gramian_entries, bench_kernel_table);
criterion_main!(benches);
