//! Run settings: defaults, an optional TOML file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::analytic::{ReturnModel, SolverConfig};
use crate::dist::{calibrate_to_quantile, CalibrationFamily, HoldingPeriodDist};
use crate::error::{Result, RiskError};
use crate::exec::Execution;
use crate::mc::SimConfig;

pub const DEFAULT_CONFIDENCE: f64 = 0.9996;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<ReturnModel>,
    pub sim: Option<SimConfig>,
    pub solver: Option<SolverConfig>,
    pub confidence: Option<f64>,
    /// Holding-period law in the `--shp` grammar.
    pub shp: Option<String>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Flag values that override the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub days: Option<f64>,
    pub exposure: Option<f64>,
    pub confidence: Option<f64>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub sequential: bool,
    pub shp: Option<String>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub model: ReturnModel,
    pub sim: SimConfig,
    pub solver: SolverConfig,
    pub confidence: f64,
    pub shp: Option<HoldingPeriodDist>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunSpec {
    pub fn resolve(file: ConfigFile, flags: &Overrides) -> anyhow::Result<Self> {
        let mut model = file.model.unwrap_or_default();
        if let Some(v) = flags.mu {
            model.mu_annual = v;
        }
        if let Some(v) = flags.sigma {
            model.sigma_annual = v;
        }
        if let Some(v) = flags.days {
            model.days_per_year = v;
        }
        if let Some(v) = flags.exposure {
            model.exposure = v;
        }
        model.validate()?;

        let mut sim = file.sim.unwrap_or_default();
        if let Some(v) = flags.seed {
            sim.seed = v;
        }
        if let Some(v) = flags.paths {
            sim.paths = v;
        }
        if flags.sequential {
            sim.execution = Execution::Sequential;
        }
        sim.validate()?;

        let confidence = flags.confidence.or(file.confidence).unwrap_or(DEFAULT_CONFIDENCE);
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(RiskError::ProbabilityOutOfRange {
                value: confidence,
                range: "(0, 1)",
            }
            .into());
        }
        let shp = flags.shp.as_deref().or(file.shp.as_deref()).map(parse_shp).transpose()?;
        Ok(Self {
            model,
            sim,
            solver: file.solver.unwrap_or_default(),
            confidence,
            shp,
            format: flags.format.or(file.format).unwrap_or_default(),
            out: flags.out.clone().or(file.out),
        })
    }
}

/// Parses `point:<h>`, `twopoint:<h1>,<h2>,<p1>`, `exp:rate=<λ>|q99=<x>`,
/// `gpd:k=<k>,alpha=<α>` or `invgamma:alpha=<α>,k=<k>|mean=<m>`.
pub fn parse_shp(text: &str) -> Result<HoldingPeriodDist> {
    let (family, args) = text
        .split_once(':')
        .ok_or_else(|| grammar(text, "expected <family>:<parameters>"))?;
    let family = family.trim();
    match family {
        "point" => {
            let [h] = positional::<1>(text, args)?;
            HoldingPeriodDist::point_mass(h)
        }
        "twopoint" => {
            let [h1, h2, p1] = positional::<3>(text, args)?;
            HoldingPeriodDist::two_point(h1, h2, p1)
        }
        "exp" => {
            let mut kv = keyed(text, args)?;
            let dist = match (kv.remove("rate"), kv.remove("q99")) {
                (Some(rate), None) => HoldingPeriodDist::exponential(rate),
                (None, Some(x)) => calibrate_to_quantile(CalibrationFamily::Exponential, 0.99, x),
                _ => return Err(grammar(text, "exp takes exactly one of rate=, q99=")),
            };
            no_leftovers(text, kv)?;
            dist
        }
        "gpd" => {
            let mut kv = keyed(text, args)?;
            let k = required(text, &mut kv, "k")?;
            let alpha = required(text, &mut kv, "alpha")?;
            no_leftovers(text, kv)?;
            HoldingPeriodDist::generalized_pareto(k, alpha)
        }
        "invgamma" => {
            let mut kv = keyed(text, args)?;
            let alpha = required(text, &mut kv, "alpha")?;
            let dist = match (kv.remove("k"), kv.remove("mean")) {
                (Some(k), None) => HoldingPeriodDist::scaled_inverse_gamma(alpha, k),
                (None, Some(m)) => HoldingPeriodDist::inverse_gamma_with_mean(alpha, m),
                _ => return Err(grammar(text, "invgamma takes exactly one of k=, mean=")),
            };
            no_leftovers(text, kv)?;
            dist
        }
        other => Err(grammar(
            text,
            &format!("unknown family `{other}`; expected point, twopoint, exp, gpd or invgamma"),
        )),
    }
}

fn grammar(text: &str, reason: &str) -> RiskError {
    RiskError::invalid("shp", format!("`{text}`: {reason}"))
}

fn number(text: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| grammar(text, &format!("`{}` is not a number", s.trim())))
}

fn positional<const N: usize>(text: &str, args: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = args.split(',').collect();
    if parts.len() != N {
        return Err(grammar(text, &format!("expected {N} comma-separated values")));
    }
    let mut out = [0.0; N];
    for (slot, s) in out.iter_mut().zip(parts) {
        *slot = number(text, s)?;
    }
    Ok(out)
}

fn keyed<'a>(text: &str, args: &'a str) -> Result<BTreeMap<&'a str, f64>> {
    let mut map = BTreeMap::new();
    for part in args.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| grammar(text, &format!("expected key=value, got `{part}`")))?;
        if map.insert(k.trim(), number(text, v)?).is_some() {
            return Err(grammar(text, &format!("duplicate key `{}`", k.trim())));
        }
    }
    Ok(map)
}

fn required(text: &str, kv: &mut BTreeMap<&str, f64>, key: &str) -> Result<f64> {
    kv.remove(key).ok_or_else(|| grammar(text, &format!("missing `{key}=`")))
}

fn no_leftovers(text: &str, kv: BTreeMap<&str, f64>) -> Result<()> {
    match kv.keys().next() {
        Some(k) => Err(grammar(text, &format!("unknown key `{k}`"))),
        None => Ok(()),
    }
}
