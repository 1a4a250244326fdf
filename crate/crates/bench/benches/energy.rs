use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use conesheet::energy::{energy_breakdown, energy_gradient};
use conesheet::mesh::compute_jets;
use conesheet_bench::ansatz_fixture;

fn energy(c: &mut Criterion) {
    let mut g = c.benchmark_group("energy");
    g.sample_size(20);
    for n in [64, 128, 256] {
        let (field, p) = ansatz_fixture(n);
        g.bench_with_input(BenchmarkId::new("jets", n), &field, |b, f| {
            b.iter(|| compute_jets(f).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("breakdown", n), &field, |b, f| {
            b.iter(|| energy_breakdown(f, &p).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("gradient", n), &field, |b, f| {
            b.iter(|| energy_gradient(f, &p).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, energy);
criterion_main!(benches);
