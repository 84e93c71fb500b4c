use shp_risk::mc::{estimate_from_pnl, var_es_of_sample};
use shp_risk::{
    mc_var_es, risk_report, simulate_pnl, Execution, HoldingPeriodDist, MultiAssetModel, ReturnModel, RiskError,
    SimConfig,
};

fn cfg(paths: usize) -> SimConfig {
    SimConfig::with_paths(paths)
}

#[test]
fn oracle_agreement_across_models() {
    let models = [
        ReturnModel::default(),
        ReturnModel::new(0.08, 0.2, 252.0, 1_000.0).unwrap(),
        ReturnModel::new(0.0, 0.45, 250.0, 50.0).unwrap(),
    ];
    let laws = [
        HoldingPeriodDist::point_mass(20.0).unwrap(),
        HoldingPeriodDist::two_point(5.0, 60.0, 0.8).unwrap(),
        HoldingPeriodDist::exponential(0.1).unwrap(),
        HoldingPeriodDist::generalized_pareto(9.0, 3.0).unwrap(),
        HoldingPeriodDist::scaled_inverse_gamma(3.0, 4.0).unwrap(),
    ];
    for m in &models {
        for shp in &laws {
            for c in [0.95, 0.99] {
                let a = risk_report(m, shp, c).unwrap();
                let s = mc_var_es(m, shp, c, &cfg(400_000)).unwrap();
                assert!((s.var - a.var).abs() <= 3.0 * s.var_stderr, "{shp} c={c}: {s:?} vs {a:?}");
                assert!((s.es - a.es).abs() <= 3.0 * s.es_stderr, "{shp} c={c}: {s:?} vs {a:?}");
            }
        }
    }
}

#[test]
fn identical_across_batch_sizes_and_execution() {
    let m = ReturnModel::default();
    let shp = HoldingPeriodDist::scaled_inverse_gamma(1.5, 8.66 / 3.0).unwrap();
    let base = simulate_pnl(&m, &shp, &cfg(100_003)).unwrap();
    for batch in [1, 7, 1000, 65_536, 1 << 20] {
        for execution in [Execution::Sequential, Execution::Parallel] {
            let c = SimConfig {
                batch,
                execution,
                ..cfg(100_003)
            };
            assert_eq!(simulate_pnl(&m, &shp, &c).unwrap(), base, "batch {batch} {execution:?}");
        }
    }
    // a longer run extends the shorter one
    let longer = simulate_pnl(&m, &shp, &cfg(150_000)).unwrap();
    assert_eq!(&longer.pnl[..100_003], &base.pnl[..]);
}

#[test]
fn seeds_give_different_streams() {
    let m = ReturnModel::default();
    let shp = HoldingPeriodDist::exponential(0.06).unwrap();
    let a = simulate_pnl(&m, &shp, &cfg(10_000)).unwrap();
    let b = simulate_pnl(&m, &shp, &SimConfig { seed: 43, ..cfg(10_000) }).unwrap();
    assert_ne!(a.pnl, b.pnl);
    assert_ne!(a.horizon, b.horizon);
}

#[test]
fn stderr_shrinks_like_one_over_sqrt_n() {
    let m = ReturnModel::default();
    let shp = HoldingPeriodDist::exponential(0.0614).unwrap();
    let small = mc_var_es(&m, &shp, 0.99, &cfg(250_000)).unwrap();
    let large = mc_var_es(&m, &shp, 0.99, &SimConfig { seed: 9, ..cfg(1_000_000) }).unwrap();
    for (s, l) in [(small.var_stderr, large.var_stderr), (small.es_stderr, large.es_stderr)] {
        let ratio = s / l;
        assert!(ratio > 2.0 / 1.3 && ratio < 2.0 * 1.3, "ratio {ratio}");
    }
}

/// Sample variance with a batch-means standard error.
fn variance_with_stderr(x: &[f64]) -> (f64, f64) {
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (v.len() - 1) as f64
    };
    let g = 50;
    let n = x.len();
    let groups: Vec<f64> = (0..g).map(|i| var(&x[i * n / g..(i + 1) * n / g])).collect();
    let gm = groups.iter().sum::<f64>() / g as f64;
    let se = (groups.iter().map(|v| (v - gm) * (v - gm)).sum::<f64>() / (g - 1) as f64 / g as f64).sqrt();
    (var(x), se)
}

#[test]
fn pnl_variance_matches_mixture_moments() {
    let m = ReturnModel::default();
    let d = m.days_per_year;
    for (shp, h_var) in [
        (HoldingPeriodDist::point_mass(10.0).unwrap(), 0.0),
        (HoldingPeriodDist::two_point(10.0, 75.0, 0.99).unwrap(), 0.99 * 0.01 * 65.0 * 65.0),
        (HoldingPeriodDist::exponential(0.0614).unwrap(), 1.0 / (0.0614 * 0.0614)),
    ] {
        // Var = E²(σ² E[h]/D + μ² Var[h]/D²)
        let want = m.exposure.powi(2)
            * (m.sigma_annual.powi(2) * shp.mean() / d + m.mu_annual.powi(2) * h_var / (d * d));
        let s = simulate_pnl(&m, &shp, &cfg(2_000_000)).unwrap();
        let (v, se) = variance_with_stderr(&s.pnl);
        assert!((v - want).abs() <= 3.0 * se, "{shp}: {v} vs {want} ± {se}");
    }
}

#[test]
fn single_asset_joint_equals_univariate() {
    let m = ReturnModel::default();
    let shp = HoldingPeriodDist::generalized_pareto(9.0, 2.0651).unwrap();
    let joint = MultiAssetModel::new(
        vec![m.mu_annual],
        vec![vec![m.sigma_annual * m.sigma_annual]],
        vec![m.exposure],
        m.days_per_year,
    )
    .unwrap();
    let c = cfg(50_000);
    let a = simulate_pnl(&m, &shp, &c).unwrap();
    let b = shp_risk::multivar::simulate_joint(&joint, &shp, &c).unwrap();
    assert_eq!(a.horizon, b.horizon);
    for (x, y) in a.pnl.iter().zip(b.portfolio(joint.weights())) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
    }
}

#[test]
fn estimates_need_enough_tail_points() {
    let m = ReturnModel::default();
    let shp = HoldingPeriodDist::point_mass(10.0).unwrap();
    assert!(matches!(
        mc_var_es(&m, &shp, 0.9996, &cfg(400_000)),
        Err(RiskError::InsufficientTail { .. })
    ));
    assert!(mc_var_es(&m, &shp, 0.9996, &cfg(500_000)).is_ok());
    assert!(matches!(
        mc_var_es(&m, &shp, 1.0, &cfg(500_000)),
        Err(RiskError::ProbabilityOutOfRange { .. })
    ));
}

#[test]
fn sample_estimator_orders_es_above_var() {
    let m = ReturnModel::default();
    let shp = HoldingPeriodDist::scaled_inverse_gamma(1.5, 2.0).unwrap();
    let s = simulate_pnl(&m, &shp, &cfg(200_000)).unwrap();
    for c in [0.5, 0.9, 0.99, 0.999] {
        let (var, es) = var_es_of_sample(&s.pnl, c);
        assert!(es >= var, "c={c}");
    }
    let e = estimate_from_pnl(&s.pnl, 0.99, Execution::Sequential).unwrap();
    assert!(e.var_stderr > 0.0 && e.es_stderr > 0.0);
}
