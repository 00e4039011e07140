use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{gen_population, true_marginal_effect};
use super::params::ScenarioParams;
use crate::idi::{bootstrap_frame, naive_frame, Adjustment, Frame, IdiConfig};
use crate::rng;
use crate::stats::{mean, sd};
use crate::{Error, Result};

/// An estimator scored by the bench.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    Weighting,
    Matching,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Naive, Method::Weighting, Method::Matching];

    /// Row label in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Naive => "Naive",
            Method::Weighting => "PS Weighting + IDI",
            Method::Matching => "PS Matching + IDI",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Method::Naive => 1,
            Method::Weighting => 2,
            Method::Matching => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::Weighting => "weighting",
            Method::Matching => "matching",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(Method::Naive),
            "weighting" => Ok(Method::Weighting),
            "matching" => Ok(Method::Matching),
            other => Err(Error::Invalid(format!(
                "unknown method '{other}' (expected naive, weighting or matching)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    /// Bootstrap replicates per IDI analysis.
    pub bootstrap_b: usize,
    /// Accepted subjects in the truth oracle.
    pub oracle_n: usize,
    /// Largest tolerated share of failed Monte Carlo replicates per method.
    pub max_failure_rate: f64,
    pub caliper: Option<f64>,
    /// Use this truth instead of running the oracle.
    pub truth: Option<f64>,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            bootstrap_b: 100,
            oracle_n: 1_000_000,
            max_failure_rate: 0.05,
            caliper: None,
            truth: None,
        }
    }
}

/// Point estimate and 95% interval from one method on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodEstimate {
    pub estimate: f64,
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

impl MethodEstimate {
    pub fn covers(&self, value: f64) -> bool {
        self.ci_lower <= value && value <= self.ci_upper
    }
}

/// Results of one Monte Carlo replicate, in the order of the requested
/// methods; `None` marks a failed analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub index: usize,
    pub estimates: Vec<Option<MethodEstimate>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McMetrics {
    pub method: Method,
    pub true_effect: f64,
    pub mean: f64,
    pub abs_bias: f64,
    /// Empirical SD of the estimates.
    pub sd: f64,
    /// Mean of the estimated standard errors.
    pub mean_se: f64,
    /// Share of 95% intervals containing the truth.
    pub coverage: f64,
    /// Share of 95% intervals excluding zero.
    pub rejection_rate: f64,
    pub n_reps: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub scenario: ScenarioParams,
    pub truth: f64,
    pub metrics: Vec<McMetrics>,
    pub replicates: Vec<Replicate>,
}

impl McReport {
    pub fn metrics_for(&self, method: Method) -> Option<&McMetrics> {
        self.metrics.iter().find(|m| m.method == method)
    }
}

fn analyze(frame: &Frame, method: Method, seed: u64, options: &McOptions) -> Result<MethodEstimate> {
    let adjustment = match method {
        Method::Naive => {
            let r = naive_frame(frame)?;
            return Ok(MethodEstimate {
                estimate: r.gamma,
                se: r.se,
                ci_lower: r.ci_lower,
                ci_upper: r.ci_upper,
            });
        }
        Method::Weighting => Adjustment::Weighting,
        Method::Matching => Adjustment::Matching,
    };
    let config = IdiConfig {
        adjustment,
        bootstrap_b: options.bootstrap_b,
        seed,
        caliper: options.caliper,
        diagnostics: false,
        ..IdiConfig::default()
    };
    let r = bootstrap_frame(frame, &config)?;
    Ok(MethodEstimate {
        estimate: r.gamma_hat,
        se: r.se,
        ci_lower: r.ci_lower,
        ci_upper: r.ci_upper,
    })
}

fn run_replicate(
    scenario: &ScenarioParams,
    methods: &[Method],
    seed: u64,
    index: usize,
    options: &McOptions,
) -> (Replicate, Option<Error>) {
    let mut first_error = None;
    let frame = gen_population(scenario, &mut rng::stream(seed, index as u64))
        .and_then(|ds| Frame::new(&ds, &["x1".to_string(), "x2".to_string()]));
    let estimates = match frame {
        Ok(frame) => methods
            .iter()
            .map(|&m| {
                let s = rng::child_seed(seed, index as u64, m.tag());
                analyze(&frame, m, s, options)
                    .map_err(|e| {
                        log::debug!("replicate {index}, {m}: {e}");
                        first_error.get_or_insert(e);
                    })
                    .ok()
            })
            .collect(),
        Err(e) => {
            first_error = Some(e);
            vec![None; methods.len()]
        }
    };
    (Replicate { index, estimates }, first_error)
}

/// Generates `n_reps` datasets and analyses each with every method.
///
/// Replicate `r` draws its data from stream `(seed, r)`; bootstrap seeds are
/// derived from `(seed, r, method)`. Errors if any method fails in more than
/// the tolerated share of replicates.
pub fn run_mc_replicates(
    scenario: &ScenarioParams,
    methods: &[Method],
    n_reps: usize,
    seed: u64,
    options: &McOptions,
) -> Result<Vec<Replicate>> {
    scenario.validate()?;
    if methods.is_empty() {
        return Err(Error::Empty("method list"));
    }
    let results: Vec<(Replicate, Option<Error>)> = (0..n_reps)
        .into_par_iter()
        .map(|r| run_replicate(scenario, methods, seed, r, options))
        .collect();
    let mut replicates = Vec::with_capacity(n_reps);
    let mut first_error = None;
    for (rep, err) in results {
        if let Some(e) = err {
            first_error.get_or_insert(e);
        }
        replicates.push(rep);
    }
    for k in 0..methods.len() {
        let failed = replicates.iter().filter(|r| r.estimates[k].is_none()).count();
        if failed > 0 && failed as f64 > options.max_failure_rate * n_reps as f64 {
            return Err(Error::TooManyFailures {
                failed,
                total: n_reps,
                first: Box::new(first_error.expect("a failure was recorded")),
            });
        }
    }
    Ok(replicates)
}

/// Aggregates replicate results into one row per method.
pub fn summarize(truth: f64, methods: &[Method], replicates: &[Replicate]) -> Vec<McMetrics> {
    methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let ok: Vec<&MethodEstimate> = replicates.iter().filter_map(|r| r.estimates[k].as_ref()).collect();
            let est: Vec<f64> = ok.iter().map(|e| e.estimate).collect();
            let ses: Vec<f64> = ok.iter().map(|e| e.se).collect();
            let share = |pred: &dyn Fn(&MethodEstimate) -> bool| {
                ok.iter().filter(|e| pred(e)).count() as f64 / ok.len().max(1) as f64
            };
            let m = mean(&est);
            McMetrics {
                method,
                true_effect: truth,
                mean: m,
                abs_bias: (m - truth).abs(),
                sd: sd(&est),
                mean_se: mean(&ses),
                coverage: share(&|e| e.covers(truth)),
                rejection_rate: share(&|e| !e.covers(0.0)),
                n_reps: ok.len(),
                n_failed: replicates.len() - ok.len(),
            }
        })
        .collect()
}

/// Monte Carlo study of `methods` on `scenario`.
pub fn run_mc_study(
    scenario: &ScenarioParams,
    methods: &[Method],
    n_reps: usize,
    seed: u64,
    options: &McOptions,
) -> Result<McReport> {
    if n_reps < 2 {
        return Err(Error::Invalid("a Monte Carlo study needs at least 2 replicates".into()));
    }
    let truth = match options.truth {
        Some(t) => t,
        None => true_marginal_effect(scenario, options.oracle_n, seed)?,
    };
    let replicates = run_mc_replicates(scenario, methods, n_reps, seed, options)?;
    Ok(McReport {
        scenario: scenario.clone(),
        truth,
        metrics: summarize(truth, methods, &replicates),
        replicates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub alpha: f64,
    pub method: Method,
    /// Share of 95% intervals excluding zero.
    pub power: f64,
    /// Binomial Monte Carlo standard error of `power`.
    pub mc_se: f64,
    pub n_reps: usize,
}

pub fn power_from_replicates(alpha: f64, methods: &[Method], replicates: &[Replicate]) -> Vec<PowerPoint> {
    summarize(0.0, methods, replicates)
        .into_iter()
        .map(|m| {
            let p = m.rejection_rate;
            PowerPoint {
                alpha,
                method: m.method,
                power: p,
                mc_se: (p * (1.0 - p) / m.n_reps.max(1) as f64).sqrt(),
                n_reps: m.n_reps,
            }
        })
        .collect()
}

/// Rejection rates of `H0: no effect` along a grid of treatment effects.
/// Grid point `k` uses the seed derived from `(seed, k)`.
pub fn power_curve(
    base: &ScenarioParams,
    alpha_grid: &[f64],
    methods: &[Method],
    n_reps: usize,
    seed: u64,
    options: &McOptions,
) -> Result<Vec<PowerPoint>> {
    if alpha_grid.is_empty() {
        return Err(Error::Empty("alpha grid"));
    }
    let mut out = Vec::with_capacity(alpha_grid.len() * methods.len());
    for (k, &alpha) in alpha_grid.iter().enumerate() {
        let scenario = base.clone().with_alpha(alpha);
        let s = rng::child_seed(seed, k as u64, 0x706f_7765_72);
        let reps = run_mc_replicates(&scenario, methods, n_reps, s, options)?;
        out.extend(power_from_replicates(alpha, methods, &reps));
    }
    Ok(out)
}
