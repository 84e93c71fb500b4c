//! Holding-period laws.
//!
//! Horizons are real-valued business days. Every family is sampled by
//! inverse transform through [`HoldingPeriodDist::quantile`], so one uniform
//! stream drives all of them identically.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::rng::{next_open01, UniformSource};
use crate::special::{gamma_q, inv_gamma_q};

/// Distribution of the random liquidation horizon.
///
/// Construct through the checked constructors, or call [`validate`] after
/// building a variant by hand or deserializing one.
///
/// [`validate`]: HoldingPeriodDist::validate
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum HoldingPeriodDist {
    PointMass {
        h: f64,
    },
    /// `h1` with probability `p1`, otherwise `h2`.
    TwoPoint {
        h1: f64,
        h2: f64,
        p1: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Survival `(k / (k + x))^alpha`.
    GeneralizedPareto {
        k: f64,
        alpha: f64,
    },
    /// `k · X` where `X` has density `α^α x^(−α−1) e^(−α/x) / Γ(α)`.
    ScaledInverseGamma {
        alpha: f64,
        k: f64,
    },
    Empirical {
        samples: EmpiricalSamples,
    },
}

/// Sorted, strictly positive horizon observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmpiricalSamples(Vec<f64>);

impl EmpiricalSamples {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(RiskError::invalid("samples", "empirical law needs at least one sample"));
        }
        if let Some(bad) = samples.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(RiskError::invalid(
                "samples",
                format!("horizons must be finite and positive, got {bad}"),
            ));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self(samples))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Distinct values with their probabilities, in increasing order.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let n = self.0.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &h in &self.0 {
            match out.last_mut() {
                Some((last, count)) if *last == h => *count += 1.0,
                _ => out.push((h, 1.0)),
            }
        }
        for (_, p) in &mut out {
            *p /= n;
        }
        out
    }
}

impl TryFrom<Vec<f64>> for EmpiricalSamples {
    type Error = RiskError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EmpiricalSamples> for Vec<f64> {
    fn from(s: EmpiricalSamples) -> Self {
        s.0
    }
}

/// Mean and median of a holding-period law. `mean` is `+∞` when it does
/// not exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub median: f64,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(RiskError::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

pub(crate) fn check_open_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(RiskError::ProbabilityOutOfRange {
            value: u,
            range: "(0, 1)",
        })
    }
}

impl HoldingPeriodDist {
    pub fn point_mass(h: f64) -> Result<Self> {
        let d = Self::PointMass { h };
        d.validate()?;
        Ok(d)
    }

    pub fn two_point(h1: f64, h2: f64, p1: f64) -> Result<Self> {
        let d = Self::TwoPoint { h1, h2, p1 };
        d.validate()?;
        Ok(d)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let d = Self::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn generalized_pareto(k: f64, alpha: f64) -> Result<Self> {
        let d = Self::GeneralizedPareto { k, alpha };
        d.validate()?;
        Ok(d)
    }

    pub fn scaled_inverse_gamma(alpha: f64, k: f64) -> Result<Self> {
        let d = Self::ScaledInverseGamma { alpha, k };
        d.validate()?;
        Ok(d)
    }

    /// Inverse gamma with shape `alpha` rescaled to the given mean.
    pub fn inverse_gamma_with_mean(alpha: f64, mean: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("mean", mean)?;
        if alpha <= 1.0 {
            return Err(RiskError::invalid("alpha", "a finite mean needs alpha > 1"));
        }
        Self::scaled_inverse_gamma(alpha, mean * (alpha - 1.0) / alpha)
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Ok(Self::Empirical {
            samples: EmpiricalSamples::new(samples)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::PointMass { h } => positive("h", h),
            Self::TwoPoint { h1, h2, p1 } => {
                positive("h1", h1)?;
                positive("h2", h2)?;
                if (0.0..=1.0).contains(&p1) {
                    Ok(())
                } else {
                    Err(RiskError::ProbabilityOutOfRange {
                        value: p1,
                        range: "[0, 1]",
                    })
                }
            }
            Self::Exponential { rate } => positive("rate", rate),
            Self::GeneralizedPareto { k, alpha } | Self::ScaledInverseGamma { alpha, k } => {
                positive("k", k)?;
                positive("alpha", alpha)
            }
            Self::Empirical { ref samples } => {
                // re-check in case the variant was assembled by hand
                EmpiricalSamples::new(samples.0.clone()).map(|_| ())
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::PointMass { .. } => "point_mass",
            Self::TwoPoint { .. } => "two_point",
            Self::Exponential { .. } => "exponential",
            Self::GeneralizedPareto { .. } => "generalized_pareto",
            Self::ScaledInverseGamma { .. } => "scaled_inverse_gamma",
            Self::Empirical { .. } => "empirical",
        }
    }

    /// `P(H ≤ x)`. Zero for `x < 0`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            Self::PointMass { h } => step(x, h),
            Self::TwoPoint { h1, h2, p1 } => p1 * step(x, h1) + (1.0 - p1) * step(x, h2),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::GeneralizedPareto { k, alpha } => {
                if x <= 0.0 {
                    0.0
                } else {
                    // 1 − (1 + x/k)^(−α)
                    -(-alpha * (x / k).ln_1p()).exp_m1()
                }
            }
            Self::ScaledInverseGamma { alpha, k } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_q(alpha, alpha * k / x)
                }
            }
            Self::Empirical { ref samples } => {
                let s = samples.as_slice();
                s.partition_point(|&v| v <= x) as f64 / s.len() as f64
            }
        }
    }

    /// Survival `P(H > x)`, computed without cancellation for the
    /// continuous families.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            Self::Exponential { rate } if x > 0.0 => (-rate * x).exp(),
            Self::GeneralizedPareto { k, alpha } if x > 0.0 => (-alpha * (x / k).ln_1p()).exp(),
            Self::ScaledInverseGamma { alpha, k } if x > 0.0 => {
                crate::special::gamma_p(alpha, alpha * k / x)
            }
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Generalized inverse `inf { x : F(x) ≥ u }` for `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_open_unit(u)?;
        Ok(self.quantile_unchecked(u))
    }

    /// [`quantile`](Self::quantile) without the range check; `u` must lie in `(0, 1)`.
    pub fn quantile_unchecked(&self, u: f64) -> f64 {
        match *self {
            Self::PointMass { h } => h,
            Self::TwoPoint { h1, h2, p1 } => {
                let (lo, hi, p_lo) = if h1 <= h2 { (h1, h2, p1) } else { (h2, h1, 1.0 - p1) };
                if u <= p_lo {
                    lo
                } else {
                    hi
                }
            }
            Self::Exponential { rate } => -(-u).ln_1p() / rate,
            Self::GeneralizedPareto { k, alpha } => k * (-(-u).ln_1p() / alpha).exp_m1(),
            Self::ScaledInverseGamma { alpha, k } => alpha * k / inv_gamma_q(alpha, u),
            Self::Empirical { ref samples } => {
                let s = samples.as_slice();
                let n = s.len();
                let idx = ((u * n as f64).ceil() as usize).clamp(1, n) - 1;
                s[idx]
            }
        }
    }

    /// Quantile at `u = 1 − t`, without forming `1 − t`, so that
    /// `t` far below machine epsilon still resolves the tail.
    pub fn upper_quantile_unchecked(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => -t.ln() / rate,
            Self::GeneralizedPareto { k, alpha } => k * (-t.ln() / alpha).exp_m1(),
            Self::ScaledInverseGamma { alpha, k } => {
                alpha * k / crate::special::inv_gamma_p(alpha, t)
            }
            _ => {
                // discrete laws: the generalized inverse at 1 − t, with the
                // atom boundaries decided on the survival scale
                let atoms = self.atoms().unwrap_or_default();
                let mut survival = 1.0;
                for &(h, p) in &atoms {
                    survival -= p;
                    if survival < t * (1.0 + 4.0 * f64::EPSILON) {
                        return h;
                    }
                }
                atoms.last().map_or(f64::NAN, |a| a.0)
            }
        }
    }

    /// One draw by inverse transform.
    pub fn sample<R: UniformSource + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_unchecked(next_open01(rng))
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::PointMass { h } => h,
            Self::TwoPoint { h1, h2, p1 } => p1 * h1 + (1.0 - p1) * h2,
            Self::Exponential { rate } => 1.0 / rate,
            Self::GeneralizedPareto { k, alpha } => {
                if alpha > 1.0 {
                    k / (alpha - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Self::ScaledInverseGamma { alpha, k } => {
                if alpha > 1.0 {
                    k * alpha / (alpha - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Self::Empirical { ref samples } => {
                samples.as_slice().iter().sum::<f64>() / samples.len() as f64
            }
        }
    }

    pub fn moments(&self) -> Moments {
        Moments {
            mean: self.mean(),
            median: self.quantile_unchecked(0.5),
        }
    }

    /// `E[H^p]` is finite iff `p` is below this index. `None` for laws
    /// with all moments finite.
    pub fn tail_index(&self) -> Option<f64> {
        match *self {
            Self::GeneralizedPareto { alpha, .. } | Self::ScaledInverseGamma { alpha, .. } => {
                Some(alpha)
            }
            _ => None,
        }
    }

    /// Probability atoms for laws with finite support, sorted by horizon.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            Self::PointMass { h } => Some(vec![(h, 1.0)]),
            Self::TwoPoint { h1, h2, p1 } => {
                let mut v = vec![(h1, p1), (h2, 1.0 - p1)];
                v.sort_by(|a, b| a.0.total_cmp(&b.0));
                if v[0].0 == v[1].0 {
                    v = vec![(v[0].0, 1.0)];
                }
                v.retain(|&(_, p)| p > 0.0);
                Some(v)
            }
            Self::Empirical { ref samples } => Some(samples.atoms()),
            _ => None,
        }
    }

    /// Same law for `c · H`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        positive("scale", c)?;
        let d = match *self {
            Self::PointMass { h } => Self::PointMass { h: c * h },
            Self::TwoPoint { h1, h2, p1 } => Self::TwoPoint {
                h1: c * h1,
                h2: c * h2,
                p1,
            },
            Self::Exponential { rate } => Self::Exponential { rate: rate / c },
            Self::GeneralizedPareto { k, alpha } => Self::GeneralizedPareto { k: c * k, alpha },
            Self::ScaledInverseGamma { alpha, k } => Self::ScaledInverseGamma { alpha, k: c * k },
            Self::Empirical { ref samples } => {
                Self::empirical(samples.as_slice().iter().map(|h| c * h).collect())?
            }
        };
        Ok(d)
    }
}

fn step(x: f64, at: f64) -> f64 {
    if x >= at {
        1.0
    } else {
        0.0
    }
}

impl fmt::Display for HoldingPeriodDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PointMass { h } => write!(f, "point:{h}"),
            Self::TwoPoint { h1, h2, p1 } => write!(f, "twopoint:{h1},{h2},{p1}"),
            Self::Exponential { rate } => write!(f, "exp:rate={rate}"),
            Self::GeneralizedPareto { k, alpha } => write!(f, "gpd:k={k},alpha={alpha}"),
            Self::ScaledInverseGamma { alpha, k } => write!(f, "invgamma:alpha={alpha},k={k}"),
            Self::Empirical { samples } => write!(f, "empirical:n={}", samples.len()),
        }
    }
}

/// Family whose single free parameter is fitted by [`calibrate_to_quantile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationFamily {
    PointMass,
    /// Free parameter: the rate.
    Exponential,
    /// Fixed scale `k`; free parameter: the shape.
    GeneralizedPareto { k: f64 },
    /// Fixed shape `alpha`; free parameter: the scale.
    ScaledInverseGamma { alpha: f64 },
}

/// Fits the free parameter so that `cdf(x) = u`.
pub fn calibrate_to_quantile(family: CalibrationFamily, u: f64, x: f64) -> Result<HoldingPeriodDist> {
    check_open_unit(u)?;
    if !(x.is_finite() && x > 0.0) {
        return Err(RiskError::InfeasibleTarget(format!(
            "target horizon {x} lies outside the support (0, ∞)"
        )));
    }
    match family {
        CalibrationFamily::PointMass => HoldingPeriodDist::point_mass(x),
        CalibrationFamily::Exponential => HoldingPeriodDist::exponential(-(-u).ln_1p() / x),
        CalibrationFamily::GeneralizedPareto { k } => {
            positive("k", k)?;
            HoldingPeriodDist::generalized_pareto(k, -(-u).ln_1p() / (x / k).ln_1p())
        }
        CalibrationFamily::ScaledInverseGamma { alpha } => {
            positive("alpha", alpha)?;
            // Q(α, α k / x) = u
            let k = x * inv_gamma_q(alpha, u) / alpha;
            HoldingPeriodDist::scaled_inverse_gamma(alpha, k)
        }
    }
}
