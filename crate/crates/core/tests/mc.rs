use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sos_wall::exec::Exec;
use sos_wall::lattice::{exact_expectations, ExactOracleSettings, HeightConfig, SiteBox};
use sos_wall::mc::{
    csv_row, heat_bath_draw, rho_lower_bound_check, run_chain, run_chain_with_dump, sweep, ChainConfig, Sampler,
    CSV_HEADER,
};
use sos_wall::ModelParams;

fn params(t: f64, u: f64) -> ModelParams {
    ModelParams::from_tu(t, u, 1.0).unwrap()
}

/// Exact level histogram and cumulative densities on `0..=cap`.
fn exact_levels(bx: &SiteBox, p: &ModelParams, cap: u32) -> Vec<f64> {
    let n = bx.len() as f64;
    let c = cap as usize;
    exact_expectations(bx, p, &ExactOracleSettings::new(cap, 1e-4), c + 1, |h| {
        let mut v = vec![0.0; c + 1];
        for &x in h {
            v[x as usize] += 1.0 / n;
        }
        v
    })
    .unwrap()
}

fn z_score(est: f64, se: f64, exact: f64) -> f64 {
    // Floor for levels that are essentially never visited.
    (est - exact).abs() / se.max(1e-9)
}

#[test]
fn single_site_conditional() {
    // One site with all neighbours at 1: weights t^{2|h-1|} and e^u at h = 0.
    let (t, u) = (0.3f64, 0.5f64);
    let p = params(t, u);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 400_000;
    let mut counts = [0u64; 4];
    for _ in 0..n {
        let h = heat_bath_draw(&[1; 4], &p, &mut rng) as usize;
        if h < 4 {
            counts[h] += 1;
        }
    }
    let w = |h: i32| t.powi(2 * (h - 1).abs()) * if h == 0 { u.exp() } else { 1.0 };
    let z = w(0) + w(1) + t * t / (1.0 - t * t);
    for h in 0..4 {
        let pr = w(h) / z;
        let sd = (pr * (1.0 - pr) / n as f64).sqrt();
        let got = counts[h as usize] as f64 / n as f64;
        assert!((got - pr).abs() < 4.0 * sd, "h={h}: {got} vs {pr}");
    }
}

#[test]
fn two_site_sweep_kernel() {
    // Sites (0,0) then (1,0) with boundary 1, starting from (2, 0).
    let bx = SiteBox::new(2, 1, 1);
    let (t, u) = (0.4f64, 0.2f64);
    let p = params(t, u);
    let chain = ChainConfig { exec: Exec::Sequential, ..ChainConfig::new(bx, p, 10, 0) };
    let runs = 200_000u64;
    let cap = 5usize;
    let mut counts = vec![0u64; (cap + 1) * (cap + 1)];
    let base = ChaCha8Rng::seed_from_u64(99);
    for r in 0..runs {
        let mut c = HeightConfig::new(bx, vec![2, 0]);
        sweep(&mut c, &chain, &base, r);
        let (a, b) = (c.heights[0] as usize, c.heights[1] as usize);
        if a <= cap && b <= cap {
            counts[a * (cap + 1) + b] += 1;
        }
    }
    // Exact conditional with neighbours summed far beyond the cap.
    let cond = |nbrs: [i64; 4], h: i64| -> f64 {
        let w = |x: i64| {
            let g: i64 = nbrs.iter().map(|y| (x - y).abs()).sum();
            t.powf(g as f64 / 2.0) * if x == 0 { u.exp() } else { 1.0 }
        };
        let z: f64 = (0..200).map(w).sum();
        w(h) / z
    };
    for a in 0..=cap as i64 {
        for b in 0..=cap as i64 {
            let pr = cond([1, 1, 1, 0], a) * cond([1, 1, 1, a], b);
            let got = counts[(a as usize) * (cap + 1) + b as usize] as f64 / runs as f64;
            let sd = (pr * (1.0 - pr) / runs as f64).sqrt().max(1e-6);
            assert!((got - pr).abs() < 4.0 * sd, "({a},{b}): {got} vs {pr}");
        }
    }
}

#[test]
fn heat_bath_matches_exact_box() {
    let bx = SiteBox::new(3, 3, 1);
    let p = params(0.1, 0.3);
    let chain = ChainConfig::new(bx, p, 200_000, 5);
    let obs = run_chain(&chain).unwrap();
    let exact = exact_levels(&bx, &p, 4);
    for (z, &e) in exact.iter().enumerate() {
        let est = obs.level_histogram.get(z).copied().unwrap_or(0.0);
        let se = obs.histogram_se.get(z).copied().unwrap_or(0.0);
        assert!(z_score(est, se, e) < 3.0, "z={z}: {est} +- {se} vs {e}");
    }
}

#[test]
fn metropolis_matches_exact_box() {
    let bx = SiteBox::new(2, 2, 0);
    let p = params(0.2, 0.1);
    for cap in [1, 2] {
        let chain = ChainConfig {
            sampler: Sampler::Metropolis,
            proposal_cap: cap,
            ..ChainConfig::new(bx, p, 400_000, 17)
        };
        let obs = run_chain(&chain).unwrap();
        let exact = exact_levels(&bx, &p, 5);
        for (z, &e) in exact.iter().enumerate().take(3) {
            let est = obs.level_histogram.get(z).copied().unwrap_or(0.0);
            let se = obs.histogram_se.get(z).copied().unwrap_or(0.0);
            assert!(z_score(est, se, e) < 3.0, "cap={cap} z={z}: {est} +- {se} vs {e}");
        }
    }
}

#[test]
fn reproducible_and_thread_independent() {
    let bx = SiteBox::new(6, 6, 1);
    let p = params(0.2, 0.05);
    let a = run_chain(&ChainConfig::new(bx, p, 2_000, 42)).unwrap();
    let b = run_chain(&ChainConfig::new(bx, p, 2_000, 42)).unwrap();
    let c = run_chain(&ChainConfig { exec: Exec::Sequential, ..ChainConfig::new(bx, p, 2_000, 42) }).unwrap();
    let d = run_chain(&ChainConfig::new(bx, p, 2_000, 43)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_ne!(a, d);
}

#[test]
fn observable_invariants() {
    let bx = SiteBox::new(5, 5, 2);
    let p = params(0.3, 0.0);
    let obs = run_chain(&ChainConfig { thin: 3, ..ChainConfig::new(bx, p, 3_000, 8) }).unwrap();
    let sum: f64 = obs.level_histogram.iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);
    assert!(obs.rho_z.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(obs.rho0, obs.rho_z[0]);
    assert!((obs.rho_z.last().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(obs.samples, 900);
}

#[test]
fn dihedral_symmetry_of_wall_contact() {
    let bx = SiteBox::new(3, 3, 0);
    let p = params(0.3, 0.05);
    let obs = run_chain(&ChainConfig::new(bx, p, 100_000, 23)).unwrap();
    let r = &obs.site_rho0;
    let at = |x: usize, y: usize| r[y * 3 + x];
    let corners = [at(0, 0), at(2, 0), at(0, 2), at(2, 2)];
    let edges = [at(1, 0), at(0, 1), at(2, 1), at(1, 2)];
    for group in [corners, edges] {
        let m = group.iter().sum::<f64>() / 4.0;
        for g in group {
            assert!((g - m).abs() < 0.01, "{group:?}");
        }
    }
}

#[test]
fn invalid_chains_are_rejected() {
    let bx = SiteBox::new(2, 2, 0);
    let p = params(0.2, 0.0);
    assert!(run_chain(&ChainConfig { burn_in: 10, ..ChainConfig::new(bx, p, 10, 0) }).is_err());
    assert!(run_chain(&ChainConfig { thin: 0, ..ChainConfig::new(bx, p, 100, 0) }).is_err());
}

#[test]
fn dump_and_csv() {
    let bx = SiteBox::new(2, 3, 1);
    let p = params(0.2, 0.0);
    let chain = ChainConfig { burn_in: 0, batches: 4, ..ChainConfig::new(bx, p, 8, 1) };
    let mut buf = Vec::new();
    let obs = run_chain_with_dump(&chain, Some(&mut buf)).unwrap();
    assert_eq!(&buf[..8], b"SOSWRAW1");
    assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 2);
    assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 3);
    assert_eq!(u64::from_le_bytes(buf[20..28].try_into().unwrap()), 8);
    assert_eq!(buf.len(), 28 + 8 * 6 * 4);
    let row = csv_row(&chain, &obs);
    assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
    assert!(row.contains(",2x3,8,1,"));
}

#[test]
fn wall_plateau_lower_bound() {
    let bx = SiteBox::new(8, 8, 0);
    let p = params(0.15, 0.2);
    let obs = run_chain(&ChainConfig::new(bx, p, 4_000, 3)).unwrap();
    let check = rho_lower_bound_check(0, &p, 1.0, &obs).unwrap();
    assert!(check.in_window && check.converged && check.holds, "{check:?}");
}
