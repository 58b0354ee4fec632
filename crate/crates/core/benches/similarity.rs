use std::hint::black_box;

use basketseg::harness::random_share_matrix;
use basketseg::similarity::madd_matrix;
use basketseg::{pairwise, Exec, MetricKind};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Exec); 2] = [("seq", Exec::Sequential), ("par", Exec::Parallel)];

fn dissimilarity(c: &mut Criterion) {
    for metric in [MetricKind::Euclidean, MetricKind::Cosine, MetricKind::Jaccard] {
        let mut group = c.benchmark_group(format!("pairwise/{metric}"));
        group.sample_size(10);
        for n in [100, 200, 400] {
            let m = random_share_matrix(n, 1500, 0.01, 7).unwrap();
            for (mode, exec) in MODES {
                group.bench_with_input(BenchmarkId::new(mode, n), &m, |b, m| {
                    b.iter(|| black_box(pairwise(m, metric, exec).unwrap()))
                });
            }
        }
        group.finish();
    }

    let mut group = c.benchmark_group("madd_from_euclidean");
    group.sample_size(10);
    for n in [100, 200, 400] {
        let m = random_share_matrix(n, 1500, 0.01, 7).unwrap();
        let base = pairwise(&m, MetricKind::Euclidean, Exec::Sequential).unwrap();
        for (mode, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(mode, n), &base, |b, base| {
                b.iter(|| black_box(madd_matrix(base, exec).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, dissimilarity);
criterion_main!(benches);
