//! Liquidity-adjusted market risk under a stochastic holding period.
//!
//! The liquidation horizon `H` is random, so portfolio log-returns follow a
//! Gaussian variance mixture. This crate provides:
//!
//! * [`dist`]: holding-period laws (point mass, two-point, exponential,
//!   generalized Pareto, scaled inverse gamma, empirical);
//! * [`analytic`]: closed-form Gaussian VaR/ES and the semi-analytic mixture
//!   VaR/ES by root search and quadrature;
//! * [`mc`]: seeded, order-independent Monte Carlo estimates;
//! * [`multivar`]: common-horizon multivariate mixtures, portfolio risk and
//!   dependence diagnostics (Kendall's tau, finite-level tail dependence);
//! * [`cli`]: the `shp-risk` command-line front end.

pub mod analytic;
pub mod cli;
pub mod dist;
pub mod error;
pub mod exec;
pub mod mc;
pub mod multivar;
pub mod normal;
pub mod numeric;
pub mod rng;
pub mod special;

pub use analytic::{normal_es, normal_var, risk_report, shp_es, shp_var, ReturnModel, SolverConfig};
pub use dist::{calibrate_to_quantile, CalibrationFamily, HoldingPeriodDist, Moments};
pub use error::{Result, RiskError};
pub use exec::Execution;
pub use mc::{mc_var_es, simulate_pnl, PnlSample, SimConfig};
pub use multivar::{DependenceReport, MultiAssetModel};

use serde::{Deserialize, Serialize};

/// How a [`RiskEstimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    RootSearch,
    MonteCarlo,
}

/// VaR and ES at one confidence level, as positive currency losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub var: f64,
    pub es: f64,
    pub confidence: f64,
    pub method: Method,
    /// Zero unless `method` is Monte Carlo.
    pub var_stderr: f64,
    pub es_stderr: f64,
}

impl RiskEstimate {
    /// `ES / VaR − 1`.
    pub fn es_var_excess(&self) -> f64 {
        self.es / self.var - 1.0
    }
}
