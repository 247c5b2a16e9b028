use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sos_wall::catalog::{Catalog, CatalogKey};
use sos_wall::cluster::cluster_sum;
use sos_wall::exec::Exec;
use sos_wall::lattice::{exact_partition, ExactOracleSettings, HeightConfig, SiteBox};
use sos_wall::mc::{sweep, ChainConfig};
use sos_wall::ModelParams;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Auto)];

fn catalogs(c: &mut Criterion) {
    let mut g = c.benchmark_group("catalog_k8_h2_n6");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| Catalog::build(CatalogKey::new(8, 2, 6), exec).unwrap()));
    }
    g.finish();
}

fn cluster_sums(c: &mut Criterion) {
    let cat = Catalog::build(CatalogKey::new(8, 1, 7), Exec::Auto).unwrap();
    let mut g = c.benchmark_group("cluster_sum_k8_h1_n7");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| cluster_sum(&cat.footprints, 7, exec).unwrap()));
    }
    g.finish();
}

fn sweeps(c: &mut Criterion) {
    let p = ModelParams::from_tu(0.15, 0.05, 1.0).unwrap();
    let mut g = c.benchmark_group("heat_bath_sweep");
    for l in [16usize, 64] {
        let bx = SiteBox::new(l, l, 1);
        for (name, exec) in MODES {
            let chain = ChainConfig { exec, ..ChainConfig::new(bx, p, 10, 0) };
            let base = ChaCha8Rng::seed_from_u64(0);
            let mut config = HeightConfig::flat(bx, 1);
            let mut s = 0u64;
            g.bench_with_input(BenchmarkId::new(name, l), &l, |b, _| {
                b.iter(|| {
                    sweep(&mut config, &chain, &base, s);
                    s += 1;
                })
            });
        }
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let p = ModelParams::from_tu(0.1, 0.3, 1.0).unwrap();
    let bx = SiteBox::new(3, 2, 1);
    let mut g = c.benchmark_group("exact_partition_3x2_cap5");
    g.sample_size(10);
    g.bench_function("auto", |b| b.iter(|| exact_partition(&bx, &p, &ExactOracleSettings::new(5, 1e-3)).unwrap()));
    g.finish();
}

criterion_group!(benches, catalogs, cluster_sums, sweeps, oracle);
criterion_main!(benches);
