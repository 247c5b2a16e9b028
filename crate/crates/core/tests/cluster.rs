use num_rational::BigRational;
use sos_wall::catalog::{Catalog, CatalogKey};
use sos_wall::cluster::{self, enumerate_clusters, free_energy, free_energy_difference, truncated_factor};
use sos_wall::exec::Exec;
use sos_wall::series::{rat, LaurentSeries};

#[test]
fn level_zero_low_orders() {
    let f = free_energy(0, 8, 3, Exec::Auto).unwrap();
    let mut want = LaurentSeries::zero(3);
    want.add_linear_u(rat(-1, 1));
    want.add_term(2, -1, rat(-1, 1));
    want.add_term(3, -2, rat(-2, 1));
    assert_eq!(f, want, "{f}");
}

#[test]
fn first_layer_difference() {
    let d = free_energy_difference(0, 8, 3, Exec::Auto).unwrap();
    let mut want = LaurentSeries::zero(3);
    want.add_linear_u(rat(1, 1));
    for (q, c) in [(0, -1), (1, -1), (-1, 1)] {
        want.add_term(2, q, rat(c, 1));
    }
    for (q, c) in [(0, -2), (2, -2), (-2, 2)] {
        want.add_term(3, q, rat(c, 1));
    }
    assert_eq!(d, want, "{d}");
}

#[test]
fn footprints_agree_with_single_perturbations() {
    for h in 0..3 {
        let cat = Catalog::build(CatalogKey::new(8, h, 6), Exec::Auto).unwrap();
        let a = cluster::cluster_sum(&cat.footprints, 6, Exec::Auto).unwrap();
        let b = cluster::cluster_sum(&cluster::singleton_footprints(&cat), 6, Exec::Sequential).unwrap();
        assert_eq!(a, b, "level {h}");
    }
}

#[test]
fn anchored_clusters_reproduce_the_series() {
    for h in 0..3 {
        let n = 6;
        let cat = Catalog::build(CatalogKey::new(8, h, n), Exec::Auto).unwrap();
        let xs = enumerate_clusters(&cat, (0, 0), n, Exec::Auto).unwrap();
        let mut s = LaurentSeries::zero(n);
        for x in &xs {
            let a = truncated_factor(x).unwrap();
            let w = BigRational::from_integer(x.support().len().into());
            s.add_term(x.order(), x.wall(), a / w);
        }
        let want = cluster::cluster_sum(&cat.footprints, n, Exec::Auto).unwrap();
        assert_eq!(s, want, "level {h}");
    }
}

#[test]
#[ignore]
fn timing() {
    for (h, n) in [(2u32, 9u32), (3, 9), (3, 10), (3, 11), (3, 12)] {
        let t0 = std::time::Instant::now();
        let cat = Catalog::build(CatalogKey::new(8, h, n), Exec::Auto).unwrap();
        let t1 = t0.elapsed();
        let f = sos_wall::cluster::free_energy_from(&cat, Exec::Auto).unwrap();
        eprintln!("h={h} n={n} perts={} fps={} cat {:?} total {:?} terms {}", cat.len(), cat.footprints.len(), t1, t0.elapsed(), f.len());
    }
}

#[test]
fn published_coefficients() {
    use sos_wall::coefficients::{build_source, verify_coefficients};
    let src = build_source(Exec::Auto);
    let r = verify_coefficients(8, 7, &src, Exec::Auto).unwrap();
    eprintln!("{r}");
    assert_eq!(r.exit_code(), 0);
    let r = verify_coefficients(8, 3, &src, Exec::Auto).unwrap();
    eprintln!("{r}");
    assert_eq!(r.exit_code(), 2);
}

#[test]
fn templates_at_low_levels() {
    use sos_wall::coefficients::{level_sum, template_check};
    for h in [1u32, 2] {
        let n = 3 * h + 3;
        let a = level_sum(&Catalog::build(CatalogKey::new(8, h, n), Exec::Auto).unwrap(), Exec::Auto).unwrap();
        let b = level_sum(&Catalog::build(CatalogKey::new(8, h + 1, n), Exec::Auto).unwrap(), Exec::Auto).unwrap();
        let r = template_check(h, &a, &b).unwrap_or_else(|e| panic!("level {h}: {e}"));
        eprintln!("h={h} L: {:?}", r.l_table);
    }
}

#[test]
#[ignore]
fn torus_report() {
    use sos_wall::torus::log_density;
    for l in [4usize, 5, 6, 7, 8] {
        for h in 0..3 {
            let cat = Catalog::build(CatalogKey::new(8, h, 6), Exec::Auto).unwrap();
            let s = cluster::cluster_sum(&cat.footprints, 6, Exec::Auto).unwrap();
            let d = log_density(&cat, l, 6).unwrap().sub(&s);
            eprintln!("L={l} h={h} diff: {d}");
        }
    }
}

#[test]
#[ignore]
fn dominance_report() {
    use sos_wall::dominance::{dominant_level, window_midpoint, SeriesBook};
    use sos_wall::ModelParams;
    let book = SeriesBook::new(8, 9, Exec::Auto);
    for t in [0.001, 0.002] {
        for n in 0..3 {
            let u = window_midpoint(t, 1.0, n).unwrap();
            let p = ModelParams::from_tu(t, u, 1.0).unwrap();
            let d = dominant_level(&p, &book, 4).unwrap();
            eprintln!("t={t} n={n} u={u:e} -> {} margins {:?}", d.level, d.margins);
        }
    }
    let cat = Catalog::build(CatalogKey::new(8, 1, 6), Exec::Auto).unwrap();
    let t = sos_wall::params::t1(8) / 2.0;
    let r = cluster::convergence_check(&cat, &ModelParams::from_tu(t, t.sqrt(), 1.0).unwrap(), Exec::Auto);
    eprintln!("worst {} violations {}", r.worst_ratio(), r.violations());
}
