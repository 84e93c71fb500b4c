//! The `shp-risk` command line.
//!
//! Every command first computes a complete [`Report`], then renders and
//! writes it in one piece, so an engine error never leaves a partial table.

mod render;
mod spec;

pub use render::{Column, Report, Row};
pub use spec::{parse_shp, ConfigFile, Format, Overrides, RunSpec, DEFAULT_CONFIDENCE};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::analytic::{normal_es, normal_var, MixtureSolver};
use crate::dist::{calibrate_to_quantile, CalibrationFamily, HoldingPeriodDist};
use crate::mc::{mc_var_es, simulate_pnl};
use crate::multivar::{
    dependence_report, simulate_joint, t_copula_tail_dependence, MultiAssetModel, DEFAULT_TAIL_LEVELS,
};
use crate::{Method, RiskEstimate};
use render::col;

#[derive(Debug, Parser)]
#[command(name = "shp-risk", version, about = "VaR and Expected Shortfall under a stochastic holding period")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML file with defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo paths.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Annual log-return drift.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Annual log-return volatility.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Business days per year.
    #[arg(long, global = true)]
    pub days: Option<f64>,
    /// Position size in currency units.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub exposure: Option<f64>,
    #[arg(long, global = true)]
    pub confidence: Option<f64>,
    /// Holding-period law, e.g. `point:10`, `twopoint:10,75,0.99`,
    /// `exp:q99=75`, `gpd:k=9,alpha=2.0651`, `invgamma:alpha=1.5,mean=8.66`.
    #[arg(long, global = true)]
    pub shp: Option<String>,
    /// Run the simulation on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            mu: self.mu,
            sigma: self.sigma,
            days: self.days,
            exposure: self.exposure,
            confidence: self.confidence,
            seed: self.seed,
            paths: self.paths,
            sequential: self.sequential,
            shp: self.shp.clone(),
            format: self.format,
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// VaR and ES for fixed and two-point horizons, simulated and analytic.
    Table2,
    /// Horizon statistics and risk for the exponential, Pareto and inverse-gamma laws.
    Table3,
    /// VaR by root search and by simulation.
    Var,
    /// ES by root search and by simulation.
    Es,
    /// Fit a holding-period law to one quantile.
    Calibrate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        target_q: f64,
        #[arg(long)]
        target_x: f64,
        /// Fixed GPD scale.
        #[arg(long, default_value_t = 9.0)]
        k: f64,
        /// Fixed inverse-gamma shape.
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
    },
    /// Export simulated paths as CSV.
    Simulate {
        #[arg(long)]
        export: PathBuf,
        /// Export a correlated pair `x1,x2,h` instead of `pnl,holding_period`.
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
    },
    /// Rank and tail dependence of two zero-drift assets sharing one horizon.
    Dependence {
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TAIL_LEVELS)]
        levels: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Point,
    Exp,
    Gpd,
    Invgamma,
}

/// Parses arguments, runs the command and writes the report.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.global.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let spec = RunSpec::resolve(file, &cli.global.overrides())?;
    let report = execute(&cli.command, &spec)?;
    let text = report.render(spec.format);
    match &spec.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Computes the report of one command.
pub fn execute(command: &Command, spec: &RunSpec) -> anyhow::Result<Report> {
    match command {
        Command::Table2 => table2(spec),
        Command::Table3 => table3(spec),
        Command::Var => var_es(spec, false),
        Command::Es => var_es(spec, true),
        Command::Calibrate {
            family,
            target_q,
            target_x,
            k,
            alpha,
        } => calibrate(spec, *family, *target_q, *target_x, *k, *alpha),
        Command::Simulate { export, rho } => simulate(spec, export, *rho),
        Command::Dependence { rho, levels } => dependence(spec, *rho, levels),
    }
}

fn table2_rows() -> Vec<HoldingPeriodDist> {
    vec![
        HoldingPeriodDist::PointMass { h: 10.0 },
        HoldingPeriodDist::PointMass { h: 75.0 },
        HoldingPeriodDist::TwoPoint {
            h1: 10.0,
            h2: 75.0,
            p1: 0.99,
        },
    ]
}

fn table3_rows() -> Vec<HoldingPeriodDist> {
    vec![
        calibrate_to_quantile(CalibrationFamily::Exponential, 0.99, 75.0).expect("valid target"),
        HoldingPeriodDist::GeneralizedPareto { k: 9.0, alpha: 2.0651 },
        HoldingPeriodDist::ScaledInverseGamma {
            alpha: 1.5,
            k: 8.66 / 3.0,
        },
    ]
}

fn base_inputs(spec: &RunSpec) -> Map<String, Value> {
    let m = &spec.model;
    let mut inputs = Map::new();
    inputs.insert("mu_annual".into(), json!(m.mu_annual));
    inputs.insert("sigma_annual".into(), json!(m.sigma_annual));
    inputs.insert("days_per_year".into(), json!(m.days_per_year));
    inputs.insert("exposure".into(), json!(m.exposure));
    inputs.insert("confidence".into(), json!(spec.confidence));
    inputs.insert("paths".into(), json!(spec.sim.paths));
    inputs
}

fn shp_list(rows: &[HoldingPeriodDist]) -> Value {
    rows.iter().map(|d| Value::String(d.to_string())).collect()
}

/// Closed form for a fixed horizon, root search otherwise.
fn analytic(spec: &RunSpec, shp: &HoldingPeriodDist) -> anyhow::Result<RiskEstimate> {
    let c = spec.confidence;
    if let HoldingPeriodDist::PointMass { h } = shp {
        return Ok(RiskEstimate {
            var: normal_var(&spec.model, *h, c)?,
            es: normal_es(&spec.model, *h, c)?,
            confidence: c,
            method: Method::ClosedForm,
            var_stderr: 0.0,
            es_stderr: 0.0,
        });
    }
    Ok(MixtureSolver::new(&spec.model, shp, &spec.solver)?.report(c)?)
}

fn table2(spec: &RunSpec) -> anyhow::Result<Report> {
    let dists = spec.shp.clone().map_or_else(table2_rows, |d| vec![d]);
    let mut rows = Vec::with_capacity(dists.len());
    for shp in &dists {
        let a = analytic(spec, shp)?;
        let s = mc_var_es(&spec.model, shp, spec.confidence, &spec.sim)?;
        rows.push(
            Row::new(shp.to_string(), vec![Some(s.var), Some(a.var), Some(s.es), Some(a.es)])
                .with_stderr(0, s.var_stderr)
                .with_stderr(2, s.es_stderr),
        );
    }
    let mut inputs = base_inputs(spec);
    inputs.insert("shp".into(), shp_list(&dists));
    Ok(Report {
        command: "table2",
        seed: spec.sim.seed,
        inputs,
        label_title: "holding period",
        columns: vec![
            col("var_sim", "VaR sim"),
            col("var_analytic", "VaR analytic"),
            col("es_sim", "ES sim"),
            col("es_analytic", "ES analytic"),
        ],
        rows,
    })
}

fn table3(spec: &RunSpec) -> anyhow::Result<Report> {
    let dists = spec.shp.clone().map_or_else(table3_rows, |d| vec![d]);
    let mut rows = Vec::with_capacity(dists.len());
    for shp in &dists {
        let a = analytic(spec, shp)?;
        let s = mc_var_es(&spec.model, shp, spec.confidence, &spec.sim)?;
        rows.push(
            Row::new(
                shp.to_string(),
                vec![
                    Some(shp.mean()),
                    Some(shp.quantile(0.5)?),
                    Some(shp.quantile(0.99)?),
                    Some(s.var),
                    Some(a.var),
                    Some(s.es),
                    Some(a.es),
                    Some(100.0 * a.es_var_excess()),
                ],
            )
            .with_stderr(3, s.var_stderr)
            .with_stderr(5, s.es_stderr),
        );
    }
    let mut inputs = base_inputs(spec);
    inputs.insert("shp".into(), shp_list(&dists));
    Ok(Report {
        command: "table3",
        seed: spec.sim.seed,
        inputs,
        label_title: "holding period",
        columns: vec![
            col("mean", "mean"),
            col("median", "median"),
            col("q99", "99%-q"),
            col("var_sim", "VaR sim"),
            col("var_root", "VaR root"),
            col("es_sim", "ES sim"),
            col("es_root", "ES root"),
            col("es_var_excess_pct", "ES/VaR-1 %"),
        ],
        rows,
    })
}

fn required_shp(spec: &RunSpec) -> anyhow::Result<&HoldingPeriodDist> {
    spec.shp
        .as_ref()
        .context("a holding-period law is required: pass --shp or set `shp` in the config file")
}

fn method_label(m: Method) -> &'static str {
    match m {
        Method::ClosedForm => "closed form",
        Method::RootSearch => "root search",
        Method::MonteCarlo => "monte carlo",
    }
}

fn var_es(spec: &RunSpec, with_es: bool) -> anyhow::Result<Report> {
    let shp = required_shp(spec)?;
    let estimates = [analytic(spec, shp)?, mc_var_es(&spec.model, shp, spec.confidence, &spec.sim)?];
    let rows = estimates
        .iter()
        .map(|e| {
            let label = method_label(e.method);
            let is_mc = e.method == Method::MonteCarlo;
            if with_es {
                let row = Row::new(label, vec![Some(e.var), Some(e.es)]);
                if is_mc {
                    row.with_stderr(0, e.var_stderr).with_stderr(1, e.es_stderr)
                } else {
                    row
                }
            } else {
                let row = Row::new(label, vec![Some(e.var)]);
                if is_mc {
                    row.with_stderr(0, e.var_stderr)
                } else {
                    row
                }
            }
        })
        .collect();
    let mut inputs = base_inputs(spec);
    inputs.insert("shp".into(), Value::String(shp.to_string()));
    let columns = if with_es {
        vec![col("var", "VaR"), col("es", "ES")]
    } else {
        vec![col("var", "VaR")]
    };
    Ok(Report {
        command: if with_es { "es" } else { "var" },
        seed: spec.sim.seed,
        inputs,
        label_title: "method",
        columns,
        rows,
    })
}

fn calibrate(
    spec: &RunSpec,
    family: FamilyArg,
    u: f64,
    x: f64,
    k: f64,
    alpha: f64,
) -> anyhow::Result<Report> {
    let fam = match family {
        FamilyArg::Point => CalibrationFamily::PointMass,
        FamilyArg::Exp => CalibrationFamily::Exponential,
        FamilyArg::Gpd => CalibrationFamily::GeneralizedPareto { k },
        FamilyArg::Invgamma => CalibrationFamily::ScaledInverseGamma { alpha },
    };
    let fitted = calibrate_to_quantile(fam, u, x)?;
    let median = fitted.quantile(0.5)?;
    let row = Row::new(
        fitted.to_string(),
        vec![Some(fitted.mean()), Some(median), Some(fitted.cdf(x) - u)],
    );
    let mut inputs = Map::new();
    inputs.insert("family".into(), json!(fitted.family_name()));
    inputs.insert("target_q".into(), json!(u));
    inputs.insert("target_x".into(), json!(x));
    Ok(Report {
        command: "calibrate",
        seed: spec.sim.seed,
        inputs,
        label_title: "fitted law",
        columns: vec![col("mean", "mean"), col("median", "median"), col("cdf_residual", "cdf(x)-q")],
        rows: vec![row],
    })
}

fn simulate(spec: &RunSpec, export: &PathBuf, rho: Option<f64>) -> anyhow::Result<Report> {
    let shp = required_shp(spec)?;
    let m = &spec.model;
    let create = || File::create(export).with_context(|| format!("creating {}", export.display()));
    let mean_h = match rho {
        None => {
            let sample = simulate_pnl(m, shp, &spec.sim)?;
            sample.write_csv(BufWriter::new(create()?))?;
            mean(&sample.horizon)
        }
        Some(rho) => {
            let model = MultiAssetModel::bivariate(
                [m.mu_annual; 2],
                [m.sigma_annual; 2],
                rho,
                [0.5, 0.5],
                m.days_per_year,
            )?;
            let sample = simulate_joint(&model, shp, &spec.sim)?;
            sample.write_csv(BufWriter::new(create()?))?;
            mean(&sample.horizon)
        }
    };
    let mut inputs = base_inputs(spec);
    inputs.remove("confidence");
    inputs.insert("shp".into(), Value::String(shp.to_string()));
    if let Some(rho) = rho {
        inputs.insert("rho".into(), json!(rho));
    }
    Ok(Report {
        command: "simulate",
        seed: spec.sim.seed,
        inputs,
        label_title: "export",
        columns: vec![col("mean_horizon", "mean horizon")],
        rows: vec![Row::new(export.display().to_string(), vec![Some(mean_h)])],
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Limiting tail-dependence coefficient where it is known in closed form.
fn tail_limit(shp: &HoldingPeriodDist, rho: f64) -> Option<f64> {
    match shp {
        HoldingPeriodDist::ScaledInverseGamma { alpha, .. } => Some(t_copula_tail_dependence(2.0 * alpha, rho)),
        HoldingPeriodDist::GeneralizedPareto { .. } => None,
        _ if rho >= 1.0 => Some(1.0),
        _ => Some(0.0),
    }
}

fn dependence(spec: &RunSpec, rho: f64, levels: &[f64]) -> anyhow::Result<Report> {
    let shp = required_shp(spec)?;
    let m = &spec.model;
    let model = MultiAssetModel::bivariate([0.0; 2], [m.sigma_annual; 2], rho, [0.5, 0.5], m.days_per_year)?;
    let rep = dependence_report(&model, shp, &spec.sim, levels)?;
    let verdict = if rep.tau_invariance_pass { "PASS" } else { "FAIL" };
    let mut rows = vec![Row::new("kendall tau", vec![Some(rep.kendall_tau_hat), Some(rep.analytic_tau)])
        .with_stderr(0, rep.tau_stderr)
        .with_status(verdict)];
    let limit = tail_limit(shp, rep.rho);
    for t in &rep.tail_dep_hat {
        rows.push(Row::new(format!("lambda({})", t.u), vec![Some(t.lambda), limit]).with_stderr(0, t.stderr));
    }
    let mut inputs = Map::new();
    inputs.insert("rho".into(), json!(rho));
    inputs.insert("sigma_annual".into(), json!(m.sigma_annual));
    inputs.insert("days_per_year".into(), json!(m.days_per_year));
    inputs.insert("shp".into(), Value::String(rep.shp.clone()));
    inputs.insert("paths".into(), json!(rep.paths));
    Ok(Report {
        command: "dependence",
        seed: rep.seed,
        inputs,
        label_title: "statistic",
        columns: vec![col("estimate", "estimate"), col("reference", "reference")],
        rows,
    })
}
