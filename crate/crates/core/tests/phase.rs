use sos_wall::dominance::{layering_windows, window_midpoint, SeriesBook};
use sos_wall::exec::Exec;
use sos_wall::phase::{
    chalker_classify, chalker_thresholds, complete_boundary_k, partial_boundary_k, partial_boundary_slope, scan, Axes,
    Chalker, Grid, ScanSpec,
};
use sos_wall::ModelParams;

#[test]
fn slope_of_partial_curve() {
    let b: Vec<f64> = (1..=20).map(|i| 0.005 * i as f64).collect();
    let slope = partial_boundary_slope(1.0, &b).unwrap();
    assert!((slope + 2.0 * 2f64.ln()).abs() < 1e-9, "{slope}");
}

#[test]
fn thresholds_at_unit_coupling() {
    // beta J = 1, K = 0 gives u = 2.
    let (p, c) = chalker_thresholds(1.0, 1.0).unwrap();
    let x = (-2f64).exp();
    assert!((p + ((1.0 - x) / (16.0 * (1.0 + x))).ln()).abs() < 1e-15);
    assert!((c + (1.0 - (-8f64).exp()).ln()).abs() < 1e-15);
    let class = chalker_classify(1.0, 0.0, 1.0).unwrap();
    assert_eq!(class, Chalker::Unresolved);
    for d in [-1e-9, 1e-9] {
        assert_eq!(chalker_classify(1.0, d, 1.0 + d).unwrap(), class);
    }
}

#[test]
fn curves_are_ordered() {
    // The partial curve lies below the complete one in K.
    for beta in [0.3, 1.0, 5.0] {
        assert!(partial_boundary_k(1.0, beta).unwrap() < complete_boundary_k(1.0, beta).unwrap());
        let below = partial_boundary_k(1.0, beta).unwrap() - 0.01;
        assert_eq!(chalker_classify(1.0, below, beta).unwrap(), Chalker::Partial);
        let above = complete_boundary_k(1.0, beta).unwrap() + 0.01;
        assert_eq!(chalker_classify(1.0, above, beta).unwrap(), Chalker::Complete);
    }
}

#[test]
fn windows_shrink_by_t() {
    let t = 0.01;
    let w = layering_windows(t, 0.5, 6).unwrap();
    for n in 1..6 {
        let r = (w[n + 1].2 - w[n + 1].1) / (w[n].2 - w[n].1);
        assert!((r - t).abs() < 1e-6, "{r}");
    }
    assert!(layering_windows(t, 0.0, 2).is_err());
}

#[test]
fn scan_windows_match_series_levels() {
    let book = SeriesBook::new(8, 6, Exec::Auto);
    let t = 0.001;
    let spec = ScanSpec {
        axes: Axes::Series {
            t: Grid { lo: t, hi: t, count: 1 },
            u: Grid { lo: window_midpoint(t, 1.0, 1).unwrap(), hi: window_midpoint(t, 1.0, 0).unwrap(), count: 2 },
        },
        epsilon: 1.0,
        n_max: 2,
        order: 6,
        ..ScanSpec::default()
    };
    let rows = scan(&spec, &book, Exec::Auto).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.window.is_some());
        assert_eq!(r.window, r.dominant, "{r:?}");
        assert!(r.margin > 0.0);
    }
    let p = ModelParams::from_tu(t, rows[0].u, 1.0).unwrap();
    assert!((rows[0].k - p.k()).abs() < 1e-12);
}
