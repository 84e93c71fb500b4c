//! Gaussian VaR/ES for fixed horizons, and semi-analytic VaR/ES when the
//! horizon is random.
//!
//! Conditional on a horizon `h` the log-return is normal with mean
//! `μ·h/D` and volatility `σ·√(h/D)`. Under a random horizon the loss
//! exceedance probability is the mixture
//!
//! ```text
//! T(V) = ∫ Φ̄((μ_h + V) / σ_h) dF_H(h)
//! ```
//!
//! which is strictly decreasing in `V`; VaR solves `T(V) = 1 − c` by Brent's
//! method and ES integrates the conditional Gaussian shortfall against the
//! same measure. Laws with finite support use their atoms exactly; the
//! others go through [`HorizonGrid::quadrature`].

use serde::{Deserialize, Serialize};

use crate::dist::HoldingPeriodDist;
use crate::error::{Result, RiskError};
use crate::normal;
use crate::numeric::{brent, BrentOptions, GaussLegendre};
use crate::{Method, RiskEstimate};

/// Annualized Gaussian log-return model of a single position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReturnModel {
    /// Log-return drift per year.
    pub mu_annual: f64,
    /// Log-return volatility per year.
    pub sigma_annual: f64,
    /// Business days per year.
    pub days_per_year: f64,
    /// Position size in currency units.
    pub exposure: f64,
}

impl Default for ReturnModel {
    fn default() -> Self {
        Self {
            mu_annual: -0.015,
            sigma_annual: 0.30,
            days_per_year: 250.0,
            exposure: 100.0,
        }
    }
}

impl ReturnModel {
    pub fn new(mu_annual: f64, sigma_annual: f64, days_per_year: f64, exposure: f64) -> Result<Self> {
        let m = Self {
            mu_annual,
            sigma_annual,
            days_per_year,
            exposure,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu_annual.is_finite() {
            return Err(RiskError::invalid("mu_annual", "must be finite"));
        }
        for (name, v) in [
            ("sigma_annual", self.sigma_annual),
            ("days_per_year", self.days_per_year),
            ("exposure", self.exposure),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(RiskError::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Mean log-return over `h` business days.
    #[inline]
    pub fn horizon_mean(&self, h: f64) -> f64 {
        self.mu_annual * h / self.days_per_year
    }

    /// Log-return volatility over `h` business days.
    #[inline]
    pub fn horizon_vol(&self, h: f64) -> f64 {
        self.sigma_annual * (h / self.days_per_year).sqrt()
    }
}

fn check_confidence(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(RiskError::ProbabilityOutOfRange {
            value: c,
            range: "(0, 1)",
        })
    }
}

fn check_horizon(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(RiskError::invalid("h", format!("horizon must be finite and > 0, got {h}")))
    }
}

/// VaR over a fixed horizon, per unit of exposure.
fn unit_normal_var(model: &ReturnModel, h: f64, c: f64) -> f64 {
    -model.horizon_mean(h) + normal::inv_cdf(c) * model.horizon_vol(h)
}

/// `exposure · (−μ_h + Φ⁻¹(c) σ_h)`.
pub fn normal_var(model: &ReturnModel, h: f64, c: f64) -> Result<f64> {
    model.validate()?;
    check_horizon(h)?;
    check_confidence(c)?;
    Ok(model.exposure * unit_normal_var(model, h, c))
}

/// `exposure · (−μ_h + σ_h p(Φ⁻¹(c)) / (1 − c))`.
pub fn normal_es(model: &ReturnModel, h: f64, c: f64) -> Result<f64> {
    model.validate()?;
    check_horizon(h)?;
    check_confidence(c)?;
    let z = normal::inv_cdf(c);
    Ok(model.exposure * (-model.horizon_mean(h) + model.horizon_vol(h) * normal::pdf(z) / (1.0 - c)))
}

/// How the mixture integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integration {
    /// Exact sums for laws with finite support, quadrature otherwise.
    #[default]
    Auto,
    /// Quadrature for every law; jumps of discrete laws become panel edges.
    Quadrature,
}

/// Numerical settings of the semi-analytic solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Panels on `u ∈ (0, 1/2]`, uniform.
    pub lower_panels: usize,
    /// Panels on `1 − u ∈ [tail_floor, 1/2]`, uniform in `ln(1 − u)`.
    pub upper_panels: usize,
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Smallest survival level resolved by quadrature; the remainder is
    /// closed with a power-law tail estimate.
    pub tail_floor: f64,
    /// Root-search stopping tolerance on `T(V) − (1 − c)`, relative to `1 − c`.
    pub root_tol: f64,
    /// Largest accepted relative disagreement between the quadrature and a
    /// refinement with every panel halved.
    pub quad_tol: f64,
    pub max_expansions: usize,
    pub integration: Integration,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lower_panels: 8,
            upper_panels: 56,
            nodes: 16,
            tail_floor: 1e-30,
            root_tol: 1e-10,
            quad_tol: 1e-8,
            max_expansions: 60,
            integration: Integration::Auto,
        }
    }
}

/// Panels in `ln u` replacing the first uniform lower panel.
const BOTTOM_PANELS: usize = 8;

/// Discretized holding-period measure: weighted horizons plus an optional
/// tail remainder beyond the last quadrature panel.
#[derive(Debug, Clone)]
pub struct HorizonGrid {
    nodes: Vec<(f64, f64)>,
    remainder: Option<TailRemainder>,
}

/// Probability mass `mass` above the horizon `h`, for a law whose survival
/// decays like `x^(−index)` (`index = ∞` for lighter tails).
#[derive(Debug, Clone, Copy)]
struct TailRemainder {
    mass: f64,
    h: f64,
    index: f64,
}

impl TailRemainder {
    /// `∫_0^mass g(Q(1 − t)) dt` for an integrand growing like `h^growth`,
    /// approximated by `mass · g(h) / (1 − growth/index)`.
    fn integrate(&self, g_at_h: f64, growth: f64) -> f64 {
        let beta = growth / self.index;
        if beta >= 1.0 {
            return f64::INFINITY;
        }
        self.mass * g_at_h / (1.0 - beta)
    }
}

impl HorizonGrid {
    /// Atoms `(h, p)` of a law with finite support.
    pub fn exact(atoms: Vec<(f64, f64)>) -> Self {
        Self {
            nodes: atoms,
            remainder: None,
        }
    }

    /// Composite Gauss–Legendre over the probability scale: `u ∈ (0, 1/2]`
    /// uniformly except for a first panel graded in `ln u` down to
    /// `tail_floor`, then `t = 1 − u` geometrically down to `tail_floor`.
    /// `refine` splits every panel into that many equal parts.
    pub fn quadrature(shp: &HoldingPeriodDist, cfg: &SolverConfig, refine: usize) -> Self {
        let rule = GaussLegendre::new(cfg.nodes.max(1));
        let refine = refine.max(1);

        let mut lower: Vec<f64> = (0..=cfg.lower_panels.max(1))
            .map(|i| 0.5 * i as f64 / cfg.lower_panels.max(1) as f64)
            .collect();
        let s_hi = 0.5f64.ln();
        let s_lo = cfg.tail_floor.ln();
        let n_up = cfg.upper_panels.max(1);
        let mut upper: Vec<f64> = (0..=n_up)
            .map(|i| s_hi + (s_lo - s_hi) * i as f64 / n_up as f64)
            .collect();

        // jumps of discrete laws become panel edges
        if let Some(atoms) = shp.atoms() {
            let mut cum = 0.0;
            for &(_, p) in &atoms[..atoms.len().saturating_sub(1)] {
                cum += p;
                let surv = 1.0 - cum;
                if cum <= 0.5 {
                    lower.push(cum);
                } else if surv > cfg.tail_floor {
                    upper.push(surv.ln());
                }
            }
        }
        lower.sort_by(f64::total_cmp);
        lower.dedup();
        upper.sort_by(|a, b| b.total_cmp(a));
        upper.dedup();

        let mut nodes = Vec::with_capacity((lower.len() + upper.len() + BOTTOM_PANELS) * refine * rule.len());
        // the first lower panel is graded in s = ln u, since quantiles such as
        // the inverse gamma's vanish like 1/ln(1/u) at the origin
        let b_hi = lower[1].ln();
        let b_lo = cfg.tail_floor.ln().min(b_hi);
        for i in 0..BOTTOM_PANELS {
            let a = b_lo + (b_hi - b_lo) * i as f64 / BOTTOM_PANELS as f64;
            let b = b_lo + (b_hi - b_lo) * (i + 1) as f64 / BOTTOM_PANELS as f64;
            for (lo, hi) in split(a, b, refine) {
                for (s, wt) in rule.mapped(lo, hi) {
                    let u = s.exp();
                    nodes.push((shp.quantile_unchecked(u), wt * u));
                }
            }
        }
        for w in lower[1..].windows(2) {
            for (a, b) in split(w[0], w[1], refine) {
                for (u, wt) in rule.mapped(a, b) {
                    nodes.push((shp.quantile_unchecked(u), wt));
                }
            }
        }
        for w in upper.windows(2) {
            // s = ln t decreasing; dt = t ds
            for (a, b) in split(w[1], w[0], refine) {
                for (s, wt) in rule.mapped(a, b) {
                    let t = s.exp();
                    nodes.push((shp.upper_quantile_unchecked(t), wt * t));
                }
            }
        }
        let index = shp.tail_index().unwrap_or(f64::INFINITY);
        let remainder = Some(TailRemainder {
            mass: cfg.tail_floor,
            h: shp.upper_quantile_unchecked(cfg.tail_floor),
            index,
        });
        Self { nodes, remainder }
    }

    pub fn for_dist(shp: &HoldingPeriodDist, cfg: &SolverConfig) -> Self {
        match (cfg.integration, shp.atoms()) {
            (Integration::Auto, Some(atoms)) => Self::exact(atoms),
            _ => Self::quadrature(shp, cfg, 1),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.remainder.is_none()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Total mass represented, including the tail remainder.
    pub fn total_mass(&self) -> f64 {
        self.nodes.iter().map(|&(_, w)| w).sum::<f64>() + self.remainder.map_or(0.0, |r| r.mass)
    }

    /// `∫ φ(h) dF_H(h)` for a bounded integrand.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let body: f64 = self.nodes.iter().map(|&(h, w)| w * f(h)).sum();
        body + self.remainder.map_or(0.0, |r| r.integrate(f(r.h), 0.0))
    }

    /// Loss exceedance `P(loss > v)` for `v` per unit of exposure.
    pub fn exceedance(&self, model: &ReturnModel, v: f64) -> f64 {
        self.expect(|h| normal::sf((model.horizon_mean(h) + v) / model.horizon_vol(h)))
    }

    /// `∫ [−μ_h Φ(a) + σ_h p(a)] dF_H(h)` with `a = (−μ_h − v)/σ_h`:
    /// the expected loss on the event `{loss > v}`, per unit of exposure.
    pub fn tail_loss(&self, model: &ReturnModel, v: f64) -> f64 {
        let g = |h: f64| {
            let m = model.horizon_mean(h);
            let s = model.horizon_vol(h);
            let a = (-m - v) / s;
            -m * normal::cdf(a) + s * normal::pdf(a)
        };
        let body: f64 = self.nodes.iter().map(|&(h, w)| w * g(h)).sum();
        let tail = self.remainder.map_or(0.0, |r| {
            // the integrand grows like h under a negative drift and like √h
            // without drift; a positive drift makes it decay
            let growth = if model.mu_annual < 0.0 {
                1.0
            } else if model.mu_annual == 0.0 {
                0.5
            } else {
                0.0
            };
            r.integrate(g(r.h), growth)
        });
        body + tail
    }
}

fn split(a: f64, b: f64, parts: usize) -> impl Iterator<Item = (f64, f64)> {
    let step = (b - a) / parts as f64;
    (0..parts).map(move |i| {
        let lo = a + step * i as f64;
        let hi = if i + 1 == parts { b } else { lo + step };
        (lo, hi)
    })
}

/// Mixture VaR/ES solver over a fixed return model and holding-period law.
#[derive(Debug, Clone)]
pub struct MixtureSolver {
    model: ReturnModel,
    shp: HoldingPeriodDist,
    cfg: SolverConfig,
    grid: HorizonGrid,
    check: Option<HorizonGrid>,
}

impl MixtureSolver {
    pub fn new(model: &ReturnModel, shp: &HoldingPeriodDist, cfg: &SolverConfig) -> Result<Self> {
        model.validate()?;
        shp.validate()?;
        let grid = HorizonGrid::for_dist(shp, cfg);
        let check = (!grid.is_exact()).then(|| HorizonGrid::quadrature(shp, cfg, 2));
        Ok(Self {
            model: *model,
            shp: shp.clone(),
            cfg: *cfg,
            grid,
            check,
        })
    }

    pub fn grid(&self) -> &HorizonGrid {
        &self.grid
    }

    /// `P(loss > var)` with `var` in currency units.
    pub fn exceedance(&self, var: f64) -> f64 {
        self.grid.exceedance(&self.model, var / self.model.exposure)
    }

    /// `G(V) = ∫ Φ((μ_h + V)/σ_h) dF_H(h) − c`; strictly increasing in `V`.
    pub fn var_equation(&self, var: f64, c: f64) -> f64 {
        (1.0 - self.exceedance(var)) - c
    }

    /// Mixture VaR in currency units.
    pub fn var(&self, c: f64) -> Result<f64> {
        check_confidence(c)?;
        let target = 1.0 - c;
        let f = |v: f64| self.grid.exceedance(&self.model, v) - target;

        let h_star = self.shp.upper_quantile_unchecked(target / 10.0);
        let mut hi = unit_normal_var(&self.model, h_star.max(f64::MIN_POSITIVE), c);
        let scale = self.model.horizon_vol(h_star).max(1e-12);
        if hi.is_nan() || hi <= 0.0 {
            hi = scale;
        }
        let mut lo = 0.0;

        let mut expansions = 0;
        while f(hi) > 0.0 {
            if expansions == self.cfg.max_expansions {
                return Err(RiskError::BracketExpansion { expansions, lo, hi });
            }
            lo = hi;
            hi *= 2.0;
            expansions += 1;
        }
        let mut width = hi.max(scale);
        while f(lo) < 0.0 {
            if expansions == self.cfg.max_expansions {
                return Err(RiskError::BracketExpansion { expansions, lo, hi });
            }
            hi = lo;
            lo -= width;
            width *= 2.0;
            expansions += 1;
        }

        let opts = BrentOptions {
            ftol: self.cfg.root_tol * target,
            ..BrentOptions::default()
        };
        let v = brent(f, lo, hi, opts)?;

        if let Some(check) = &self.check {
            let fine = check.exceedance(&self.model, v);
            let coarse = self.grid.exceedance(&self.model, v);
            let estimate = (fine - coarse).abs() / target;
            if estimate.is_nan() || estimate > self.cfg.quad_tol {
                return Err(RiskError::QuadratureNotConverged {
                    estimate,
                    tolerance: self.cfg.quad_tol,
                });
            }
        }
        Ok(v * self.model.exposure)
    }

    /// Mixture ES in currency units, given the VaR at the same `c`.
    pub fn es(&self, c: f64, var: f64) -> Result<f64> {
        check_confidence(c)?;
        if self.es_diverges() {
            return Ok(f64::INFINITY);
        }
        let v = var / self.model.exposure;
        let loss = self.grid.tail_loss(&self.model, v);
        if let Some(check) = &self.check {
            let fine = check.tail_loss(&self.model, v);
            let estimate = ((fine - loss) / loss).abs();
            if estimate.is_nan() || estimate > self.cfg.quad_tol {
                return Err(RiskError::QuadratureNotConverged {
                    estimate,
                    tolerance: self.cfg.quad_tol,
                });
            }
        }
        Ok(self.model.exposure * loss / (1.0 - c))
    }

    /// ES is infinite when the shortfall integrand outgrows the tail of `H`:
    /// a negative drift needs `E[H] < ∞`, zero drift needs `E[√H] < ∞`.
    fn es_diverges(&self) -> bool {
        match self.shp.tail_index() {
            Some(index) if self.model.mu_annual < 0.0 => index <= 1.0,
            Some(index) if self.model.mu_annual == 0.0 => index <= 0.5,
            _ => false,
        }
    }

    pub fn report(&self, c: f64) -> Result<RiskEstimate> {
        let var = self.var(c)?;
        let es = self.es(c, var)?;
        Ok(RiskEstimate {
            var,
            es,
            confidence: c,
            method: Method::RootSearch,
            var_stderr: 0.0,
            es_stderr: 0.0,
        })
    }
}

/// VaR under a random holding period, in currency units.
pub fn shp_var(model: &ReturnModel, shp: &HoldingPeriodDist, c: f64, cfg: &SolverConfig) -> Result<f64> {
    MixtureSolver::new(model, shp, cfg)?.var(c)
}

/// ES under a random holding period, given `var` from [`shp_var`] at the same `c`.
pub fn shp_es(
    model: &ReturnModel,
    shp: &HoldingPeriodDist,
    c: f64,
    var: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    MixtureSolver::new(model, shp, cfg)?.es(c, var)
}

/// VaR and ES by root search.
pub fn risk_report(model: &ReturnModel, shp: &HoldingPeriodDist, c: f64) -> Result<RiskEstimate> {
    MixtureSolver::new(model, shp, &SolverConfig::default())?.report(c)
}
