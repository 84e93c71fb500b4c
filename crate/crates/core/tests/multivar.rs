use shp_risk::multivar::{
    dependence_report, kendall_tau, portfolio_var_es, simulate_joint, tail_dep_hat, PortfolioMethod,
    DEFAULT_TAIL_LEVELS,
};
use shp_risk::{
    risk_report, HoldingPeriodDist, MultiAssetModel, ReturnModel, RiskError, SimConfig, SolverConfig,
};

fn pair(rho: f64, sigma: [f64; 2]) -> MultiAssetModel {
    MultiAssetModel::bivariate([0.0; 2], sigma, rho, [0.5; 2], 250.0).unwrap()
}

fn ig() -> HoldingPeriodDist {
    HoldingPeriodDist::scaled_inverse_gamma(1.5, 8.66 / 3.0).unwrap()
}

#[test]
fn perfect_correlation_gives_identical_paths() {
    let s = simulate_joint(&pair(1.0, [0.3; 2]), &ig(), &SimConfig::with_paths(20_000)).unwrap();
    assert_eq!(s.column(0), s.column(1));
}

#[test]
fn tau_is_invariant_to_marginal_scale() {
    let cfg = SimConfig::with_paths(50_000);
    let a = simulate_joint(&pair(0.5, [0.3; 2]), &ig(), &cfg).unwrap();
    let b = simulate_joint(&pair(0.5, [0.1, 0.7]), &ig(), &cfg).unwrap();
    let ta = kendall_tau(&a.column(0), &a.column(1)).unwrap();
    let tb = kendall_tau(&b.column(0), &b.column(1)).unwrap();
    assert!((ta - tb).abs() < 1e-12, "{ta} vs {tb}");
}

#[test]
fn report_passes_arcsine_check() {
    let rep = dependence_report(&pair(0.5, [0.3; 2]), &ig(), &SimConfig::with_paths(1_000_000), &DEFAULT_TAIL_LEVELS)
        .unwrap();
    assert!(rep.tau_invariance_pass, "{rep:?}");
    assert!((rep.analytic_tau - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(rep.tail_dep_hat.len(), 4);
    let json = serde_json::to_value(&rep).unwrap();
    assert_eq!(json["seed"], 42);
}

#[test]
fn independence_under_a_fixed_horizon() {
    let s = simulate_joint(
        &pair(0.0, [0.3; 2]),
        &HoldingPeriodDist::point_mass(10.0).unwrap(),
        &SimConfig::with_paths(2_000_000),
    )
    .unwrap();
    let l = tail_dep_hat(&s.column(0), &s.column(1), &[0.999]).unwrap()[0];
    // binomial spread under independence
    let se = (0.001 * 0.999 / l.conditioning as f64).sqrt();
    assert!((l.lambda - 0.001).abs() <= 3.0 * se, "{l:?}");
}

#[test]
fn gaussian_tail_dependence_fades_along_the_ladder() {
    let s = simulate_joint(
        &pair(0.5, [0.3; 2]),
        &HoldingPeriodDist::point_mass(10.0).unwrap(),
        &SimConfig::with_paths(2_000_000),
    )
    .unwrap();
    let ladder = tail_dep_hat(&s.column(0), &s.column(1), &[0.95, 0.99, 0.999]).unwrap();
    for w in ladder.windows(2) {
        let gap = w[0].lambda - w[1].lambda;
        let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(gap > 3.0 * se, "{:?}", w);
    }
}

#[test]
fn power_tailed_horizon_keeps_tail_dependence() {
    let cfg = SimConfig::with_paths(2_000_000);
    let model = pair(0.0, [0.3; 2]);
    let lam = |shp: &HoldingPeriodDist| {
        let s = simulate_joint(&model, shp, &cfg).unwrap();
        tail_dep_hat(&s.column(0), &s.column(1), &[0.999]).unwrap()[0]
    };
    let heavy = lam(&ig());
    let light = lam(&HoldingPeriodDist::exponential(0.0614).unwrap());
    let se = (heavy.stderr.powi(2) + light.stderr.powi(2)).sqrt();
    assert!(heavy.lambda - light.lambda > 3.0 * se, "{heavy:?} vs {light:?}");
}

#[test]
fn high_correlation_gaussian_ladder_decreases() {
    let s = simulate_joint(
        &pair(0.999, [0.3; 2]),
        &HoldingPeriodDist::point_mass(10.0).unwrap(),
        &SimConfig::with_paths(10_000_000),
    )
    .unwrap();
    let ladder = tail_dep_hat(&s.column(0), &s.column(1), &[0.99, 0.9999]).unwrap();
    let gap = ladder[0].lambda - ladder[1].lambda;
    let se = (ladder[0].stderr.powi(2) + ladder[1].stderr.powi(2)).sqrt();
    assert!(gap > 2.0 * se, "{ladder:?}");
}

#[test]
fn equal_volatility_pair_reduces_to_single_position() {
    for rho in [-0.5, 0.0, 0.3, 1.0] {
        let m = MultiAssetModel::bivariate([-0.015; 2], [0.3; 2], rho, [50.0, 50.0], 250.0).unwrap();
        let r = m.reduce().unwrap();
        assert!((r.sigma_annual - 100.0 * 0.3 * ((1.0 + rho) / 2.0).sqrt()).abs() < 1e-12);
        assert!((r.mu_annual - 100.0 * -0.015).abs() < 1e-15);
        let single = ReturnModel::new(-0.015, 0.3 * ((1.0 + rho) / 2.0).sqrt(), 250.0, 100.0).unwrap();
        if rho > -1.0 {
            let a = portfolio_var_es(&m, &ig(), 0.99, PortfolioMethod::RootSearch(SolverConfig::default())).unwrap();
            let b = risk_report(&single, &ig(), 0.99).unwrap();
            assert!((a.var - b.var).abs() < 1e-9 * b.var, "rho {rho}");
            assert!((a.es - b.es).abs() < 1e-9 * b.es, "rho {rho}");
        }
    }
}

#[test]
fn portfolio_monte_carlo_agrees_with_root_search() {
    let m = MultiAssetModel::bivariate([-0.015, 0.02], [0.3, 0.2], 0.4, [60.0, 40.0], 250.0).unwrap();
    let shp = HoldingPeriodDist::generalized_pareto(9.0, 3.0).unwrap();
    let a = portfolio_var_es(&m, &shp, 0.99, PortfolioMethod::RootSearch(SolverConfig::default())).unwrap();
    let s = portfolio_var_es(&m, &shp, 0.99, PortfolioMethod::MonteCarlo(SimConfig::with_paths(1_000_000))).unwrap();
    assert!((s.var - a.var).abs() <= 3.0 * s.var_stderr, "{s:?} vs {a:?}");
    assert!((s.es - a.es).abs() <= 3.0 * s.es_stderr, "{s:?} vs {a:?}");
}

#[test]
fn invalid_models_are_rejected() {
    let not_psd = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
    assert!(matches!(
        MultiAssetModel::new(vec![0.0; 2], not_psd, vec![1.0; 2], 250.0),
        Err(RiskError::NotPositiveSemiDefinite)
    ));
    assert!(matches!(
        MultiAssetModel::new(vec![0.0; 2], vec![vec![1.0]], vec![1.0; 2], 250.0),
        Err(RiskError::Dimension(_))
    ));
    assert!(MultiAssetModel::bivariate([0.0; 2], [0.3; 2], 1.2, [1.0; 2], 250.0).is_err());
    let three = MultiAssetModel::new(vec![0.0; 3], vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], vec![1.0; 3], 250.0)
        .unwrap();
    assert!(dependence_report(&three, &ig(), &SimConfig::with_paths(1_000_000), &[0.99]).is_err());
}

#[test]
fn joint_export_has_asset_columns() {
    let s = simulate_joint(&pair(0.2, [0.3; 2]), &ig(), &SimConfig::with_paths(10_000)).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("x1,x2,h\n"));
    assert_eq!(text.lines().count(), 10_001);
}
