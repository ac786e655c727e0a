use std::sync::Arc;

use fdreg::bandwidth::{build_plan, h_star_from_distances};
use fdreg::experiments::{besicovitch_probe, generate, Eta, ProcessSpec, RegressionSpec};
use fdreg::io::{read_dataset, write_dataset};
use fdreg::{
    cnp_schedule, empirical_basis, h1_norm, l2_distance, make_uniform_grid, predict_discretized,
    predict_full, predict_knn, reconstruct, uniform_kernel, EmbeddedSample, Grid, Metric,
    PseudometricSpec, ReferenceCurve, VariantKind,
};

fn grid(p: usize) -> Arc<Grid> {
    Arc::new(make_uniform_grid(p).unwrap())
}

#[test]
fn simulate_write_read_fit() {
    let g = grid(128);
    let reg = RegressionSpec::new(Eta::IntegralMean, 0.05).unwrap();
    let data = generate(&ProcessSpec::smooth_fourier(20, 1.0, 11).unwrap(), &reg, 60, g).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (c, r) = (dir.path().join("curves.csv"), dir.path().join("responses.csv"));
    write_dataset(&c, &r, &data).unwrap();
    let back = read_dataset(&c, &r).unwrap();
    let x = &back.curves()[3];
    let a = predict_knn(x, &data, 5, &uniform_kernel()).unwrap();
    let b = predict_knn(x, &back, 5, &uniform_kernel()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn refinement_changes_distance_at_second_order() {
    let f = |t: f64| (3.0 * t).sin() + t * t;
    let g = |t: f64| (2.0 * t).cos();
    let d = |p: usize| {
        let grid = grid(p);
        l2_distance(
            &ReferenceCurve::from_fn(Arc::clone(&grid), f).unwrap(),
            &ReferenceCurve::from_fn(grid, g).unwrap(),
        )
        .unwrap()
    };
    let exact = d(1 << 14);
    let e1 = (d(64) - exact).abs();
    let e2 = (d(128) - exact).abs();
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

/// |predict_discretized − predict_full| at fixed queries shrinks as p grows.
#[test]
fn discretized_tracks_full_as_p_grows() {
    let g = grid(fdreg::DEFAULT_REFERENCE_INTERVALS);
    let reg = RegressionSpec::new(Eta::IntegralMean, 0.1).unwrap();
    let data = generate(&ProcessSpec::smooth_fourier(30, 1.0, 21).unwrap(), &reg, 150, Arc::clone(&g)).unwrap();
    let queries = generate(&ProcessSpec::smooth_fourier(30, 1.0, 22).unwrap(), &reg, 60, g).unwrap();
    let kernel = uniform_kernel();
    let schedule = cnp_schedule(VariantKind::Discretize, None).unwrap();
    let full = EmbeddedSample::new(&data, &Metric::Full).unwrap();
    let median_gap = |p: usize| {
        let spec = PseudometricSpec::discretize(p).unwrap();
        let sample = EmbeddedSample::new(&data, &Metric::Pseudo(spec.clone())).unwrap();
        // Same schedule shape as shipped, scaled to desk size.
        let c_np = 1e-3 * schedule.value(data.len(), p).unwrap();
        let mut gaps: Vec<f64> = queries
            .curves()
            .iter()
            .map(|x| {
                let df = full.distances(x).unwrap();
                let h = h_star_from_distances(&df).unwrap();
                let f = predict_full(x, &data, h, &kernel).unwrap().prediction;
                let dp = sample.distances(x).unwrap();
                let plan = build_plan(h_star_from_distances(&dp).unwrap(), c_np, 1.0).unwrap();
                let q = predict_discretized(x, &data, &spec, plan, &kernel).unwrap().prediction;
                (q - f).abs()
            })
            .collect();
        gaps.sort_by(f64::total_cmp);
        gaps[gaps.len() / 2]
    };
    let coarse = median_gap(16);
    let fine = median_gap(256);
    assert!(fine < coarse, "median gap p=16 {coarse}, p=256 {fine}");
}

#[test]
fn reconstruction_error_is_bounded_by_the_h1_norm() {
    let g = grid(fdreg::DEFAULT_REFERENCE_INTERVALS);
    let x = ReferenceCurve::from_fn(g, |t| (5.0 * t).sin() + 0.3 * t).unwrap();
    let h1 = h1_norm(&x).unwrap();
    for spec_of in [
        (|p| PseudometricSpec::discretize(p).unwrap()) as fn(usize) -> PseudometricSpec,
        |p| PseudometricSpec::smooth(p, None, uniform_kernel()).unwrap(),
    ] {
        let err = |p: usize| p as f64 * l2_distance(&x, &reconstruct(&x, &spec_of(p)).unwrap()).unwrap();
        let c = err(8) / h1;
        for p in [16, 32, 64, 128, 256, 512] {
            assert!(err(p) <= 2.0 * h1 * c, "p = {p}");
        }
    }
}

#[test]
fn eigen_distance_is_score_distance() {
    let g = grid(64);
    let reg = RegressionSpec::new(Eta::IntegralMean, 0.0).unwrap();
    let data = generate(&ProcessSpec::brownian(31), &reg, 40, g).unwrap();
    let basis = Arc::new(empirical_basis(&data, 10).unwrap());
    let spec = PseudometricSpec::eigen(7, Arc::clone(&basis)).unwrap();
    let (a, b) = (&data.curves()[0], &data.curves()[1]);
    let sa = fdreg::scores(a, &basis, 7).unwrap();
    let sb = fdreg::scores(b, &basis, 7).unwrap();
    let euclid = sa.0.iter().zip(&sb.0).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    assert_eq!(fdreg::pseudo_distance(a, b, &spec).unwrap(), euclid);
}

#[test]
fn besicovitch_decreases_with_delta_for_continuous_eta() {
    let reg = RegressionSpec::new(Eta::IntegralMean, 0.0).unwrap();
    let data = generate(&ProcessSpec::smooth_fourier(30, 1.0, 41).unwrap(), &reg, 500, grid(256)).unwrap();
    let eta: Vec<f64> = data.curves().iter().map(|c| Eta::IntegralMean.evaluate(c)).collect();
    let rows = besicovitch_probe(&data, &eta, &[2.0, 1.0, 0.5, 0.25]).unwrap();
    assert!(rows.windows(2).all(|w| w[1].value < w[0].value), "{rows:?}");
}
