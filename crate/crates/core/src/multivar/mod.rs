//! Several Gaussian assets sharing one random holding period.
//!
//! Conditional on the common horizon `h`, returns are multivariate normal
//! with mean `μ·h/D` and covariance `Σ·h/D`. Any linear portfolio is then
//! univariate normal given `h`, so its risk reduces to a [`ReturnModel`].

mod dependence;

pub use dependence::{
    analytic_kendall_tau, dependence_report, kendall_tau, kendall_tau_hat, t_copula_tail_dependence,
    tail_dep_hat, DependenceReport, TailLevel, TauEstimate, DEFAULT_TAIL_LEVELS, MIN_PAIRS,
    MIN_TAIL_EXCEEDANCES,
};

use std::io::Write;

use serde::Serialize;

use crate::analytic::{MixtureSolver, ReturnModel, SolverConfig};
use crate::dist::HoldingPeriodDist;
use crate::error::{Result, RiskError};
use crate::mc::{estimate_from_pnl, SimConfig};
use crate::normal;
use crate::rng::{next_open01, stream_at, Substream};
use crate::RiskEstimate;

/// Relative size (against the trace) below which a Cholesky pivot counts
/// as zero.
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiAssetModel {
    mu_annual: Vec<f64>,
    cov_annual: Vec<Vec<f64>>,
    weights: Vec<f64>,
    days_per_year: f64,
    #[serde(skip)]
    chol: Vec<f64>,
}

impl MultiAssetModel {
    /// Validates dimensions and factorizes the covariance; rejects matrices
    /// that are asymmetric or not positive semi-definite.
    pub fn new(
        mu_annual: Vec<f64>,
        cov_annual: Vec<Vec<f64>>,
        weights: Vec<f64>,
        days_per_year: f64,
    ) -> Result<Self> {
        let n = mu_annual.len();
        if n == 0 {
            return Err(RiskError::Dimension("at least one asset is required".into()));
        }
        if cov_annual.len() != n || cov_annual.iter().any(|r| r.len() != n) {
            return Err(RiskError::Dimension(format!("covariance must be {n}×{n}")));
        }
        if weights.len() != n {
            return Err(RiskError::Dimension(format!(
                "{} weights for {n} assets",
                weights.len()
            )));
        }
        if !(days_per_year.is_finite() && days_per_year > 0.0) {
            return Err(RiskError::invalid("days_per_year", "must be finite and > 0"));
        }
        if mu_annual.iter().chain(&weights).chain(cov_annual.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(RiskError::invalid("model", "all entries must be finite"));
        }
        let chol = cholesky_psd(&cov_annual)?;
        Ok(Self {
            mu_annual,
            cov_annual,
            weights,
            days_per_year,
            chol,
        })
    }

    /// Two assets with correlation `rho`.
    pub fn bivariate(
        mu: [f64; 2],
        sigma: [f64; 2],
        rho: f64,
        weights: [f64; 2],
        days_per_year: f64,
    ) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(RiskError::invalid("rho", format!("must lie in [-1, 1], got {rho}")));
        }
        let c = rho * sigma[0] * sigma[1];
        Self::new(
            mu.to_vec(),
            vec![vec![sigma[0] * sigma[0], c], vec![c, sigma[1] * sigma[1]]],
            weights.to_vec(),
            days_per_year,
        )
    }

    pub fn n_assets(&self) -> usize {
        self.mu_annual.len()
    }

    pub fn mu_annual(&self) -> &[f64] {
        &self.mu_annual
    }

    pub fn cov_annual(&self) -> &[Vec<f64>] {
        &self.cov_annual
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn days_per_year(&self) -> f64 {
        self.days_per_year
    }

    /// Lower-triangular factor `L` with `L Lᵀ = Σ`, row-major.
    pub fn cholesky(&self) -> &[f64] {
        &self.chol
    }

    /// Portfolio as a single position: drift `w·μ`, volatility `√(wᵀΣw)`,
    /// unit exposure (the weights already carry the position sizes).
    pub fn reduce(&self) -> Result<ReturnModel> {
        let n = self.n_assets();
        let mu: f64 = self.weights.iter().zip(&self.mu_annual).map(|(w, m)| w * m).sum();
        let mut var = 0.0;
        for i in 0..n {
            for j in 0..n {
                var += self.weights[i] * self.cov_annual[i][j] * self.weights[j];
            }
        }
        ReturnModel::new(mu, var.max(0.0).sqrt(), self.days_per_year, 1.0)
    }
}

/// Cholesky that tolerates singular positive semi-definite input: a pivot
/// within `PIVOT_TOL · trace` of zero gives a zero column.
fn cholesky_psd(a: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = a.len();
    let trace: f64 = (0..n).map(|i| a[i][i]).sum();
    let tol = PIVOT_TOL * trace.abs().max(f64::MIN_POSITIVE);
    let symmetric = a
        .iter()
        .enumerate()
        .all(|(i, row)| row[..i].iter().enumerate().all(|(j, v)| (v - a[j][i]).abs() <= tol));
    if !symmetric {
        return Err(RiskError::NotPositiveSemiDefinite);
    }
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let d = a[j][j] - (0..j).map(|k| l[j * n + k] * l[j * n + k]).sum::<f64>();
        if d < -tol {
            return Err(RiskError::NotPositiveSemiDefinite);
        }
        if d <= tol {
            // zero pivot: the remaining entries of the column must vanish too
            for i in j + 1..n {
                let r = a[i][j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
                if r.abs() > tol.sqrt() * a[i][i].abs().max(tol).sqrt() {
                    return Err(RiskError::NotPositiveSemiDefinite);
                }
            }
            continue;
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let r = a[i][j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            l[i * n + j] = r / ljj;
        }
    }
    Ok(l)
}

/// Simulated joint returns (row-major, one row per path) and horizons.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    pub n_assets: usize,
    pub returns: Vec<f64>,
    pub horizon: Vec<f64>,
}

impl JointSample {
    pub fn paths(&self) -> usize {
        self.horizon.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.returns.iter().skip(j).step_by(self.n_assets).copied().collect()
    }

    /// `Σ_j w_j x_j` per path.
    pub fn portfolio(&self, weights: &[f64]) -> Vec<f64> {
        self.returns
            .chunks_exact(self.n_assets)
            .map(|row| row.iter().zip(weights).map(|(x, w)| x * w).sum())
            .collect()
    }

    /// Writes `x1,...,xm,h` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.n_assets).map(|j| format!("x{j}")).collect();
        header.push("h".into());
        w.write_record(&header)?;
        for (row, h) in self.returns.chunks_exact(self.n_assets).zip(&self.horizon) {
            let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
            rec.push(h.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One common `h ~ shp` per path drives every asset:
/// `x ~ N(μ h/D, Σ h/D)`.
pub fn simulate_joint(model: &MultiAssetModel, shp: &HoldingPeriodDist, cfg: &SimConfig) -> Result<JointSample> {
    shp.validate()?;
    cfg.validate()?;
    let m = model.n_assets();
    let l = &model.chol;
    let chunks = cfg.execution.map_batches(cfg.paths, cfg.batch, |range| {
        let mut horizons = stream_at(cfg.seed, Substream::Horizon, range.start as u64);
        let mut shocks = stream_at(cfg.seed, Substream::Shock, (range.start * m) as u64);
        let mut xs = Vec::with_capacity(range.len() * m);
        let mut hs = Vec::with_capacity(range.len());
        let mut z = vec![0.0; m];
        for _ in range {
            let h = shp.sample(&mut horizons);
            for zj in z.iter_mut() {
                *zj = normal::inv_cdf(next_open01(&mut shocks));
            }
            let t = h / model.days_per_year;
            let scale = t.sqrt();
            for i in 0..m {
                let corr: f64 = (0..=i).map(|k| l[i * m + k] * z[k]).sum();
                xs.push(model.mu_annual[i] * t + scale * corr);
            }
            hs.push(h);
        }
        (xs, hs)
    });
    let mut out = JointSample {
        n_assets: m,
        returns: Vec::with_capacity(cfg.paths * m),
        horizon: Vec::with_capacity(cfg.paths),
    };
    for (x, h) in chunks {
        out.returns.extend(x);
        out.horizon.extend(h);
    }
    Ok(out)
}

/// How [`portfolio_var_es`] evaluates the portfolio mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PortfolioMethod {
    RootSearch(SolverConfig),
    MonteCarlo(SimConfig),
}

/// VaR/ES of the weighted portfolio, in the units of the weights.
pub fn portfolio_var_es(
    model: &MultiAssetModel,
    shp: &HoldingPeriodDist,
    c: f64,
    method: PortfolioMethod,
) -> Result<RiskEstimate> {
    match method {
        PortfolioMethod::RootSearch(cfg) => MixtureSolver::new(&model.reduce()?, shp, &cfg)?.report(c),
        PortfolioMethod::MonteCarlo(cfg) => {
            crate::mc::check_tail(cfg.paths, c)?;
            let sample = simulate_joint(model, shp, &cfg)?;
            estimate_from_pnl(&sample.portfolio(&model.weights), c, cfg.execution)
        }
    }
}
