//! Seeded Monte Carlo estimates of VaR and ES under a random horizon.
//!
//! Each path draws its horizon from the horizon substream and its Gaussian
//! shock from the shock substream, both addressed by path index (see
//! [`crate::rng`]). Estimates are therefore a pure function of the seed,
//! the path count and the inputs, whatever the batch size or thread count.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytic::ReturnModel;
use crate::dist::HoldingPeriodDist;
use crate::error::{Result, RiskError};
use crate::exec::Execution;
use crate::normal;
use crate::rng::{next_open01, stream_at, Substream};
use crate::{Method, RiskEstimate};

pub const DEFAULT_SEED: u64 = 42;
pub const MIN_PATHS: usize = 10_000;
/// Fewest expected tail observations accepted by [`mc_var_es`].
pub const MIN_TAIL_POINTS: f64 = 200.0;
/// Number of contiguous groups used for batch-means standard errors.
pub const STDERR_GROUPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    pub paths: usize,
    /// Paths per work unit.
    pub batch: usize,
    pub execution: Execution,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            paths: 2_000_000,
            batch: 1 << 16,
            execution: Execution::default(),
        }
    }
}

impl SimConfig {
    pub fn with_paths(paths: usize) -> Self {
        Self {
            paths,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths < MIN_PATHS {
            return Err(RiskError::invalid(
                "paths",
                format!("at least {MIN_PATHS} paths are required, got {}", self.paths),
            ));
        }
        if self.batch == 0 {
            return Err(RiskError::invalid("batch", "must be positive"));
        }
        Ok(())
    }
}

/// Simulated P&L in currency units together with the horizon of each path.
#[derive(Debug, Clone, PartialEq)]
pub struct PnlSample {
    pub pnl: Vec<f64>,
    pub horizon: Vec<f64>,
}

impl PnlSample {
    pub fn len(&self) -> usize {
        self.pnl.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pnl.is_empty()
    }

    /// Writes `pnl,holding_period` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["pnl", "holding_period"])?;
        for (p, h) in self.pnl.iter().zip(&self.horizon) {
            w.write_record([p.to_string(), h.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws `cfg.paths` P&L values: `h ~ shp`, then `exposure · N(μ_h, σ_h²)`.
pub fn simulate_pnl(model: &ReturnModel, shp: &HoldingPeriodDist, cfg: &SimConfig) -> Result<PnlSample> {
    model.validate()?;
    shp.validate()?;
    cfg.validate()?;
    let chunks = cfg.execution.map_batches(cfg.paths, cfg.batch, |range| {
        let mut horizons = stream_at(cfg.seed, Substream::Horizon, range.start as u64);
        let mut shocks = stream_at(cfg.seed, Substream::Shock, range.start as u64);
        let mut pnl = Vec::with_capacity(range.len());
        let mut hs = Vec::with_capacity(range.len());
        for _ in range {
            let h = shp.sample(&mut horizons);
            let z = normal::inv_cdf(next_open01(&mut shocks));
            pnl.push(model.exposure * (model.horizon_mean(h) + model.horizon_vol(h) * z));
            hs.push(h);
        }
        (pnl, hs)
    });
    let mut out = PnlSample {
        pnl: Vec::with_capacity(cfg.paths),
        horizon: Vec::with_capacity(cfg.paths),
    };
    for (p, h) in chunks {
        out.pnl.extend(p);
        out.horizon.extend(h);
    }
    Ok(out)
}

/// Type-7 (linearly interpolated) empirical quantile; reorders `data`.
pub fn quantile_type7(data: &mut [f64], p: f64) -> f64 {
    let n = data.len();
    assert!(n > 0, "quantile of an empty sample");
    let pos = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= n {
        let (_, max, _) = data.select_nth_unstable_by(n - 1, f64::total_cmp);
        return *max;
    }
    let (left, upper, _) = data.select_nth_unstable_by(lo + 1, f64::total_cmp);
    let upper = *upper;
    let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lower + frac * (upper - lower)
}

/// `(VaR, ES)` of a P&L sample at confidence `c`.
///
/// VaR is the negated type-7 `(1 − c)` quantile. ES is the negated mean of
/// the P&L strictly below that quantile; observations equal to it enter
/// pro rata up to a total tail weight of `n (1 − c)`.
pub fn var_es_of_sample(pnl: &[f64], c: f64) -> (f64, f64) {
    let mut work = pnl.to_vec();
    let q = quantile_type7(&mut work, 1.0 - c);
    let (mut below, mut sum, mut ties) = (0usize, 0.0, 0usize);
    for &x in pnl {
        if x < q {
            below += 1;
            sum += x;
        } else if x == q {
            ties += 1;
        }
    }
    let target = pnl.len() as f64 * (1.0 - c);
    let tie_weight = if ties > 0 {
        ((target - below as f64) / ties as f64).clamp(0.0, 1.0) * ties as f64
    } else {
        0.0
    };
    let mass = below as f64 + tie_weight;
    let es = if mass > 0.0 { -(sum + tie_weight * q) / mass } else { -q };
    (-q, es)
}

pub(crate) fn check_tail(paths: usize, c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(RiskError::ProbabilityOutOfRange {
            value: c,
            range: "(0, 1)",
        });
    }
    let tail = paths as f64 * (1.0 - c);
    // relative slack absorbs the rounding of 1 − c
    if tail < MIN_TAIL_POINTS * (1.0 - 1e-12) {
        return Err(RiskError::InsufficientTail {
            paths,
            confidence: c,
            tail,
            required: MIN_TAIL_POINTS,
        });
    }
    Ok(())
}

/// VaR/ES of an already simulated P&L sample with batch-means standard
/// errors over [`STDERR_GROUPS`] contiguous groups.
pub fn estimate_from_pnl(pnl: &[f64], c: f64, execution: Execution) -> Result<RiskEstimate> {
    check_tail(pnl.len(), c)?;
    let (var, es) = var_es_of_sample(pnl, c);
    let n = pnl.len();
    let groups = execution.map_indices(STDERR_GROUPS, |g| {
        let lo = g * n / STDERR_GROUPS;
        let hi = (g + 1) * n / STDERR_GROUPS;
        var_es_of_sample(&pnl[lo..hi], c)
    });
    let var_stderr = batch_stderr(groups.iter().map(|g| g.0));
    let es_stderr = batch_stderr(groups.iter().map(|g| g.1));
    Ok(RiskEstimate {
        var,
        es,
        confidence: c,
        method: Method::MonteCarlo,
        var_stderr,
        es_stderr,
    })
}

fn batch_stderr(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let k = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / k;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (k - 1.0) / k).sqrt()
}

/// Monte Carlo VaR and ES. Needs `paths · (1 − c) ≥ 200`.
pub fn mc_var_es(
    model: &ReturnModel,
    shp: &HoldingPeriodDist,
    c: f64,
    cfg: &SimConfig,
) -> Result<RiskEstimate> {
    check_tail(cfg.paths, c)?;
    let sample = simulate_pnl(model, shp, cfg)?;
    estimate_from_pnl(&sample.pnl, c, cfg.execution)
}
