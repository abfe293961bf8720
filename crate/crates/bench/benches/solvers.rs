use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ncdist_bench::{commutator_pair, faces, polyhedral_pair, rng, transport};
use ncdist_core::classical::mk_distance;
use ncdist_core::hyper::hausdorff_distance;
use ncdist_core::numerics::{eigh, HermitianMatrix};
use ncdist_core::qmetric::rho;
use ncdist_core::random;
use ncdist_core::torus::{build, subcircle_distance_table, torus_seminorm, FuzzyTorusConfig};

fn numerics(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigh");
    for n in [4, 8, 16] {
        let h = HermitianMatrix::new(random::ginibre(n, &mut rng(1)).hermitian_part()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| b.iter(|| eigh(h)));
    }
    group.finish();

    let mut group = c.benchmark_group("mk_distance");
    for n in [4, 8, 16] {
        let (x, mu, nu) = transport(n, 2);
        group.bench_function(BenchmarkId::from_parameter(n), |b| b.iter(|| mk_distance(&mu, &nu, &x).unwrap()));
    }
    group.finish();
}

fn distances(c: &mut Criterion) {
    let mut group = c.benchmark_group("rho");
    for n in [2, 3] {
        let (l, mu, nu) = polyhedral_pair(n, 3);
        group.bench_function(BenchmarkId::new("polyhedral", n), |b| b.iter(|| rho(&l, &mu, &nu).unwrap()));
        let (l, mu, nu) = commutator_pair(n, 4);
        group.bench_function(BenchmarkId::new("cutting-plane", n), |b| b.iter(|| rho(&l, &mu, &nu).unwrap()));
    }
    group.finish();

    let (l, s, s2) = faces(6, 5);
    c.bench_function("hausdorff/faces-6", |b| b.iter(|| hausdorff_distance(&s, &s2, &l).unwrap()));
}

fn torus(c: &mut Criterion) {
    let bundle = build(&FuzzyTorusConfig::standard(3, 1, 1, 1)).unwrap();
    let l = torus_seminorm(&bundle).unwrap();
    let zs: Vec<_> = bundle.config.v_spectrum().into_iter().take(2).collect();
    let mut group = c.benchmark_group("torus");
    group.sample_size(10);
    group.bench_function("table-q3-pair", |b| b.iter(|| subcircle_distance_table(&bundle, &l, &zs, &Default::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, numerics, distances, torus);
criterion_main!(benches);
