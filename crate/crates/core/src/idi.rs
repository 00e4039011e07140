//! The index date imputation pipeline.
//!
//! 1. Adjust for truncation and confounding: a left-truncated Cox model of
//!    survival from diagnosis in the single-arm cohort gives each subject a
//!    truncation probability over the estimated index-time distribution;
//!    its inverse weights the single-arm rows of a logistic propensity
//!    model, which yields ATT odds weights or a 1:1 matching.
//! 2. Draw an index time for every (matched) control from that
//!    distribution and keep the control only if its follow-up outlasts it.
//! 3. Fit a weighted Cox model of time since (imputed) index on the group
//!    indicator.
//! 4. Repeat on stratified bootstrap resamples; the draws give the point
//!    estimate, standard error and percentile interval.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{
    att_weights, fit_weighted_logistic, nn_match, smd_table, BalanceReport, LogisticOptions,
    MatchOptions, Pooling,
};
use crate::rng::{self, StreamRng};
use crate::stats::{mean, quantile_sorted, sd, sorted};
use crate::surv::{breslow_cumhaz, fit_cox, CoxData, CoxFit, CoxOptions};
use crate::truncation::{
    estimate_fr_with, qq_points, single_arm_km, truncated_fr, zeta_weights, DiscreteDistribution,
    IndexObservation, TerminalMass, ZetaOptions,
};
use crate::{Dataset, Error, Group, Matrix, Result, StepFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjustment {
    #[default]
    Weighting,
    Matching,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdiConfig {
    pub adjustment: Adjustment,
    pub covariates: Vec<String>,
    pub bootstrap_b: usize,
    pub seed: u64,
    /// Matching caliper in SD units of the logit propensity score.
    pub caliper: Option<f64>,
    pub zeta_cap: Option<f64>,
    /// Largest tolerated share of failed bootstrap replicates.
    pub max_failure_rate: f64,
    /// Compute balance and Q–Q diagnostics from a reference imputation.
    pub diagnostics: bool,
    pub smd_pooling: Pooling,
    pub terminal_mass: TerminalMass,
}

impl Default for IdiConfig {
    fn default() -> Self {
        Self {
            adjustment: Adjustment::Weighting,
            covariates: Vec::new(),
            bootstrap_b: 100,
            seed: 1,
            caliper: None,
            zeta_cap: None,
            max_failure_rate: 0.05,
            diagnostics: true,
            smd_pooling: Pooling::RawCounts,
            terminal_mass: TerminalMass::Residual,
        }
    }
}

impl IdiConfig {
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        if self.bootstrap_b == 0 {
            return Err(Error::Invalid("bootstrap_b must be at least 1".into()));
        }
        if let Some(c) = self.caliper {
            if !(c > 0.0) {
                return Err(Error::Invalid("caliper must be positive".into()));
            }
        }
        if let Some(c) = self.zeta_cap {
            if !(c >= 1.0) {
                return Err(Error::Invalid("zeta_cap must be at least 1".into()));
            }
        }
        dataset.resolve(&self.covariates).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub balance: BalanceReport,
    /// `(model quantile, observed quantile)` of the truncated index-time law.
    pub qq: Vec<(f64, f64)>,
    /// Estimate from the reference imputation on the full data.
    pub reference_gamma: f64,
    pub reference_retained_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdiResult {
    /// Mean of the bootstrap draws (log hazard ratio).
    pub gamma_hat: f64,
    /// Standard deviation of the draws.
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub draws: Vec<f64>,
    pub n_failed: usize,
    /// Mean share of controls kept by the imputed-truncation filter.
    pub retained_fraction: f64,
    /// Fewer than two successful draws; `se` is not informative.
    pub degenerate: bool,
    pub diagnostics: Option<Diagnostics>,
}

impl IdiResult {
    pub fn hazard_ratio(&self) -> (f64, f64, f64) {
        (self.gamma_hat.exp(), self.ci_lower.exp(), self.ci_upper.exp())
    }

    pub fn summary(&self) -> String {
        let (hr, lo, hi) = self.hazard_ratio();
        let mut s = format!(
            "Index date imputation\n\
             log HR      {:.4} (SE {:.4})\n\
             HR          {:.3} (95% CI: {:.3}-{:.3})\n\
             replicates  {} ok, {} failed\n\
             controls retained after imputation: {:.1}%\n",
            self.gamma_hat,
            self.se,
            hr,
            lo,
            hi,
            self.draws.len(),
            self.n_failed,
            100.0 * self.retained_fraction
        );
        if self.degenerate {
            s.push_str("warning: fewer than two bootstrap draws; SE and CI are degenerate\n");
        }
        s
    }
}

/// A column-oriented view of a dataset restricted to the analysis covariates.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub event: Vec<bool>,
    pub single_arm: Vec<bool>,
    /// Index time for single-arm rows, NaN for controls.
    pub r: Vec<f64>,
    /// Row in the source dataset.
    pub source: Vec<usize>,
}

impl Frame {
    pub fn new(dataset: &Dataset, covariates: &[String]) -> Result<Self> {
        dataset.validate()?;
        let cols = dataset.resolve(covariates)?;
        let n = dataset.len();
        let mut x = Matrix::with_capacity(cols.len(), n);
        let mut buf = vec![0.0; cols.len()];
        let mut frame = Frame {
            x: Matrix::zeros(0, cols.len()),
            y: Vec::with_capacity(n),
            event: Vec::with_capacity(n),
            single_arm: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            source: (0..n).collect(),
        };
        for rec in &dataset.records {
            for (b, &c) in buf.iter_mut().zip(&cols) {
                *b = rec.covariates[c];
            }
            x.push_row(&buf);
            frame.y.push(rec.y);
            frame.event.push(rec.event);
            frame.single_arm.push(rec.group == Group::SingleArm);
            let r = rec.index_time.unwrap_or(f64::NAN);
            if rec.group == Group::SingleArm && !(rec.y > r) {
                return Err(Error::Invalid(format!(
                    "single-arm subject {} has no follow-up after its index time",
                    rec.id
                )));
            }
            frame.r.push(r);
        }
        frame.x = x;
        if !frame.single_arm.iter().any(|&s| s) {
            return Err(Error::Empty("single-arm cohort"));
        }
        if !frame.single_arm.iter().any(|&s| !s) {
            return Err(Error::Empty("control cohort"));
        }
        Ok(frame)
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Frame {
            x: self.x.select(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            event: idx.iter().map(|&i| self.event[i]).collect(),
            single_arm: idx.iter().map(|&i| self.single_arm[i]).collect(),
            r: idx.iter().map(|&i| self.r[i]).collect(),
            source: idx.iter().map(|&i| self.source[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    fn rows_where(&self, single_arm: bool) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.single_arm[i] == single_arm).collect()
    }

    fn index_observations(&self, rows: &[usize]) -> Vec<IndexObservation> {
        rows.iter()
            .map(|&i| IndexObservation {
                index_time: self.r[i],
                y: self.y[i],
                event: self.event[i],
            })
            .collect()
    }
}

/// Everything Step 1 produces.
pub(crate) struct Adjusted {
    pub fr: DiscreteDistribution,
    pub s_t: StepFunction,
    /// Rows entering Steps 2–3 and their outcome-model weights.
    pub rows: Vec<usize>,
    pub weights: Vec<f64>,
    /// Balance weights over all rows (0 for unmatched under matching).
    pub balance_weights: Vec<f64>,
}

fn converged(fit: CoxFit, model: &'static str) -> Result<CoxFit> {
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::NotConverged {
            model,
            iterations: fit.n_iter,
        })
    }
}

pub(crate) fn adjust(frame: &Frame, config: &IdiConfig) -> Result<Adjusted> {
    let singles = frame.rows_where(true);
    let obs = frame.index_observations(&singles);
    let s_t = single_arm_km(&obs).map_err(Error::at("step 1 (survival from diagnosis)"))?;
    let fr = estimate_fr_with(&obs, &s_t).map_err(Error::at("step 1 (index-time distribution)"))?;

    if config.adjustment == Adjustment::None {
        let rows: Vec<usize> = (0..frame.len()).collect();
        return Ok(Adjusted {
            fr,
            s_t,
            weights: vec![1.0; rows.len()],
            balance_weights: vec![1.0; rows.len()],
            rows,
        });
    }

    let p = frame.x.ncols();
    let mut cox = CoxData::with_capacity(p, singles.len());
    for &i in &singles {
        cox.push(frame.r[i], frame.y[i], frame.event[i], frame.x.row(i), 1.0)?;
    }
    let fit = fit_cox(&cox, &CoxOptions::default())
        .and_then(|f| converged(f, "truncation Cox model"))
        .map_err(Error::at("step 1 (truncation model)"))?;
    let cumhaz = breslow_cumhaz(&fit, &cox).map_err(Error::at("step 1 (truncation model)"))?;
    let zeta = zeta_weights(
        &frame.x.select(&singles),
        &fr,
        &fit,
        &cumhaz,
        &ZetaOptions {
            cap: config.zeta_cap,
            ..Default::default()
        },
    )
    .map_err(Error::at("step 1 (truncation weights)"))?;

    let mut ps_weights = vec![1.0; frame.len()];
    for (&i, &z) in singles.iter().zip(zeta.as_slice()) {
        ps_weights[i] = z;
    }
    let ps_fit = fit_weighted_logistic(&frame.x, &frame.single_arm, &ps_weights, &LogisticOptions::default())
        .and_then(|f| {
            if f.converged {
                Ok(f)
            } else {
                Err(Error::NotConverged {
                    model: "propensity model",
                    iterations: f.n_iter,
                })
            }
        })
        .map_err(Error::at("step 1 (propensity model)"))?;

    match config.adjustment {
        Adjustment::Weighting => {
            let w = att_weights(&ps_fit, &frame.x, &frame.single_arm, &[])
                .map_err(Error::at("step 1 (ATT weights)"))?;
            let rows: Vec<usize> = (0..frame.len()).collect();
            Ok(Adjusted {
                fr,
                s_t,
                rows,
                weights: w.clone(),
                balance_weights: w,
            })
        }
        Adjustment::Matching => {
            let ps = frame
                .x
                .rows()
                .map(|row| ps_fit.predict(row))
                .collect::<Result<Vec<_>>>()?;
            let m = nn_match(
                &ps,
                &frame.single_arm,
                &MatchOptions {
                    caliper: config.caliper,
                    ..Default::default()
                },
            )
            .map_err(Error::at("step 1 (matching)"))?;
            let mut balance_weights = vec![0.0; frame.len()];
            let mut rows = Vec::with_capacity(2 * m.pairs.len());
            for &(t, _) in &m.pairs {
                rows.push(t);
            }
            for &(_, c) in &m.pairs {
                rows.push(c);
            }
            rows.sort_unstable();
            for &i in &rows {
                balance_weights[i] = 1.0;
            }
            Ok(Adjusted {
                fr,
                s_t,
                weights: vec![1.0; rows.len()],
                rows,
                balance_weights,
            })
        }
        Adjustment::None => unreachable!("handled above"),
    }
}

/// Outcome of one imputed control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImputedIndex {
    /// Position in the input slice.
    pub row: usize,
    pub r_hat: f64,
    pub retained: bool,
    /// `y - r_hat` for retained controls.
    pub aligned_time: Option<f64>,
}

/// Draws an index time for each control follow-up `y` by inverse CDF and
/// keeps the control iff `y > r_hat`.
pub fn impute_index_dates<R: Rng + ?Sized>(
    control_y: &[f64],
    fr: &DiscreteDistribution,
    rng: &mut R,
) -> Result<Vec<ImputedIndex>> {
    let out: Vec<ImputedIndex> = control_y
        .iter()
        .enumerate()
        .map(|(row, &y)| {
            let r_hat = fr.sample(rng);
            let retained = y > r_hat;
            ImputedIndex {
                row,
                r_hat,
                retained,
                aligned_time: retained.then(|| y - r_hat),
            }
        })
        .collect();
    if !out.iter().any(|o| o.retained) {
        return Err(Error::AllControlsFiltered);
    }
    Ok(out)
}

pub(crate) struct OnceOutcome {
    pub gamma: f64,
    pub retained_fraction: f64,
}

/// Steps 2–3 given Step 1.
fn impute_and_fit<R: Rng + ?Sized>(
    frame: &Frame,
    adjusted: &Adjusted,
    rng: &mut R,
) -> Result<OnceOutcome> {
    let mut data = CoxData::with_capacity(1, adjusted.rows.len());
    let mut control_rows = Vec::new();
    let mut control_w = Vec::new();
    for (&i, &w) in adjusted.rows.iter().zip(&adjusted.weights) {
        if frame.single_arm[i] {
            data.push(0.0, frame.y[i] - frame.r[i], frame.event[i], &[1.0], w)?;
        } else {
            control_rows.push(i);
            control_w.push(w);
        }
    }
    let control_y: Vec<f64> = control_rows.iter().map(|&i| frame.y[i]).collect();
    let imputed = impute_index_dates(&control_y, &adjusted.fr, rng).map_err(Error::at("step 2 (imputation)"))?;
    let mut kept = 0usize;
    for imp in &imputed {
        if let Some(t) = imp.aligned_time {
            kept += 1;
            let i = control_rows[imp.row];
            data.push(0.0, t, frame.event[i], &[0.0], control_w[imp.row])?;
        }
    }
    let fit = fit_cox(&data, &CoxOptions::default())
        .and_then(|f| converged(f, "outcome Cox model"))
        .map_err(Error::at("step 3 (outcome model)"))?;
    Ok(OnceOutcome {
        gamma: fit.theta[0],
        retained_fraction: kept as f64 / control_rows.len() as f64,
    })
}

pub(crate) fn run_frame<R: Rng + ?Sized>(
    frame: &Frame,
    config: &IdiConfig,
    rng: &mut R,
) -> Result<OnceOutcome> {
    let adjusted = adjust(frame, config)?;
    impute_and_fit(frame, &adjusted, rng)
}

/// One pass of Steps 1–3 on `dataset`; returns the log hazard ratio.
pub fn run_idi_once<R: Rng + ?Sized>(dataset: &Dataset, config: &IdiConfig, rng: &mut R) -> Result<f64> {
    config.validate(dataset)?;
    let frame = Frame::new(dataset, &config.covariates)?;
    run_frame(&frame, config, rng).map(|o| o.gamma)
}

fn resample(frame: &Frame, singles: &[usize], controls: &[usize], rng: &mut StreamRng) -> Frame {
    let mut idx = Vec::with_capacity(frame.len());
    for group in [singles, controls] {
        for _ in 0..group.len() {
            idx.push(group[rng.random_range(0..group.len())]);
        }
    }
    frame.select(&idx)
}

fn diagnostics(frame: &Frame, config: &IdiConfig, names: &[String]) -> Result<Diagnostics> {
    let adjusted = adjust(frame, config)?;
    let mut rng = rng::stream(config.seed, 0);
    let reference = impute_and_fit(frame, &adjusted, &mut rng)?;
    let balance = smd_table(
        names,
        &frame.x,
        &frame.single_arm,
        &adjusted.balance_weights,
        config.smd_pooling,
    )?;
    let truncated = truncated_fr(&adjusted.fr, &adjusted.s_t, config.terminal_mass)?;
    let observed: Vec<f64> = frame.rows_where(true).iter().map(|&i| frame.r[i]).collect();
    Ok(Diagnostics {
        balance,
        qq: qq_points(&truncated, &observed),
        reference_gamma: reference.gamma,
        reference_retained_fraction: reference.retained_fraction,
    })
}

/// Balance and Q–Q diagnostics from one reference imputation on the full
/// data, without the bootstrap.
pub fn diagnose(dataset: &Dataset, config: &IdiConfig) -> Result<Diagnostics> {
    config.validate(dataset)?;
    let frame = Frame::new(dataset, &config.covariates)?;
    diagnostics(&frame, config, &config.covariates)
}

/// Stratified bootstrap of the whole pipeline.
///
/// Replicate `b` uses the random stream `(seed, b + 1)` for resampling and
/// imputation; stream 0 drives the reference imputation behind the
/// diagnostics. Draws are reduced in replicate order, so the result does not
/// depend on the number of threads.
pub fn bootstrap_idi(dataset: &Dataset, config: &IdiConfig) -> Result<IdiResult> {
    config.validate(dataset)?;
    let frame = Frame::new(dataset, &config.covariates)?;
    bootstrap_frame(&frame, config)
}

pub(crate) fn bootstrap_frame(frame: &Frame, config: &IdiConfig) -> Result<IdiResult> {
    let singles = frame.rows_where(true);
    let controls = frame.rows_where(false);
    let outcomes: Vec<Result<OnceOutcome>> = (0..config.bootstrap_b)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(config.seed, b as u64 + 1);
            let boot = resample(frame, &singles, &controls, &mut rng);
            run_frame(&boot, config, &mut rng)
        })
        .collect();

    let mut draws = Vec::with_capacity(outcomes.len());
    let mut retained = Vec::with_capacity(outcomes.len());
    let mut first_error = None;
    let mut n_failed = 0;
    for o in outcomes {
        match o {
            Ok(o) => {
                draws.push(o.gamma);
                retained.push(o.retained_fraction);
            }
            Err(e) => {
                n_failed += 1;
                first_error.get_or_insert(e);
            }
        }
    }
    if n_failed as f64 > config.max_failure_rate * config.bootstrap_b as f64 || draws.is_empty() {
        return Err(Error::TooManyFailures {
            failed: n_failed,
            total: config.bootstrap_b,
            first: Box::new(first_error.expect("at least one failure")),
        });
    }

    let s = sorted(&draws);
    let diagnostics = if config.diagnostics {
        Some(diagnostics(frame, config, &config.covariates)?)
    } else {
        None
    };
    Ok(IdiResult {
        gamma_hat: mean(&draws),
        se: sd(&draws),
        ci_lower: quantile_sorted(&s, 0.025),
        ci_upper: quantile_sorted(&s, 0.975),
        degenerate: draws.len() < 2,
        draws,
        n_failed,
        retained_fraction: mean(&retained),
        diagnostics,
    })
}

/// Cox model of time from diagnosis on the group indicator, with no
/// alignment or adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveResult {
    pub gamma: f64,
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

pub fn naive_analysis(dataset: &Dataset) -> Result<NaiveResult> {
    let frame = Frame::new(dataset, &[])?;
    naive_frame(&frame)
}

pub(crate) fn naive_frame(frame: &Frame) -> Result<NaiveResult> {
    let mut data = CoxData::with_capacity(1, frame.len());
    for i in 0..frame.len() {
        let z = if frame.single_arm[i] { 1.0 } else { 0.0 };
        data.push(0.0, frame.y[i], frame.event[i], &[z], 1.0)?;
    }
    let fit = converged(fit_cox(&data, &CoxOptions::default())?, "naive Cox model")?;
    let (lo, hi) = fit.wald_ci(0);
    Ok(NaiveResult {
        gamma: fit.theta[0],
        se: fit.se(0),
        ci_lower: lo,
        ci_upper: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SubjectRecord;

    fn record(id: usize, group: Group, y: f64, event: bool, x: f64, r: Option<f64>) -> SubjectRecord {
        SubjectRecord {
            id: format!("s{id}"),
            group,
            y,
            event,
            covariates: vec![x],
            index_time: r,
            weight: 1.0,
        }
    }

    #[test]
    fn point_mass_at_zero_keeps_everyone() {
        let fr = DiscreteDistribution::point_mass(0.0);
        let mut rng = rng::stream(1, 0);
        let out = impute_index_dates(&[0.5, 1.0, 3.0], &fr, &mut rng).unwrap();
        assert!(out.iter().all(|o| o.retained));
        assert_eq!(out[1].aligned_time, Some(1.0));
    }

    #[test]
    fn boundary_is_strict() {
        let fr = DiscreteDistribution::point_mass(2.0);
        let mut rng = rng::stream(1, 0);
        let out = impute_index_dates(&[2.0, 3.0], &fr, &mut rng).unwrap();
        assert!(!out[0].retained);
        assert!(out[1].retained);
        assert_eq!(
            impute_index_dates(&[2.0], &fr, &mut rng).unwrap_err(),
            Error::AllControlsFiltered
        );
    }

    fn toy() -> Dataset {
        let mut recs = Vec::new();
        for i in 0..30 {
            let x = (i % 3) as f64;
            recs.push(record(i, Group::SingleArm, 1.0 + 0.37 * i as f64 % 5.0 + 0.6, i % 4 != 0, x, Some(0.1 * (i % 6) as f64)));
        }
        for i in 30..90 {
            let x = (i % 4) as f64 * 0.5;
            recs.push(record(i, Group::Control, 0.2 + (0.53 * i as f64) % 6.0, i % 5 != 0, x, None));
        }
        Dataset::new(vec!["x".into()], recs).unwrap()
    }

    #[test]
    fn runs_are_reproducible() {
        let ds = toy();
        for adjustment in [Adjustment::Weighting, Adjustment::Matching, Adjustment::None] {
            let config = IdiConfig {
                adjustment,
                covariates: vec!["x".into()],
                bootstrap_b: 8,
                ..Default::default()
            };
            let a = bootstrap_idi(&ds, &config).unwrap();
            let b = bootstrap_idi(&ds, &config).unwrap();
            assert_eq!(a, b);
            assert!(a.ci_lower <= a.ci_upper);
            assert!(a.retained_fraction > 0.0 && a.retained_fraction <= 1.0);
            let g1 = run_idi_once(&ds, &config, &mut rng::stream(3, 3)).unwrap();
            let g2 = run_idi_once(&ds, &config, &mut rng::stream(3, 3)).unwrap();
            assert_eq!(g1.to_bits(), g2.to_bits());
        }
    }

    #[test]
    fn single_replicate_is_degenerate() {
        let ds = toy();
        let config = IdiConfig {
            covariates: vec!["x".into()],
            bootstrap_b: 1,
            ..Default::default()
        };
        let r = bootstrap_idi(&ds, &config).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.se, 0.0);
        assert_eq!(r.gamma_hat, r.draws[0]);
        assert_eq!(r.ci_lower, r.ci_upper);
    }

    #[test]
    fn missing_group_and_bad_config() {
        let ds = toy();
        let only_controls = Dataset::new(
            ds.covariate_names.clone(),
            ds.records.iter().filter(|r| r.group == Group::Control).cloned().collect(),
        )
        .unwrap();
        assert!(bootstrap_idi(&only_controls, &IdiConfig::default()).is_err());
        let bad = IdiConfig {
            bootstrap_b: 0,
            ..Default::default()
        };
        assert!(bootstrap_idi(&ds, &bad).is_err());
        let unknown = IdiConfig {
            covariates: vec!["nope".into()],
            ..Default::default()
        };
        assert!(bootstrap_idi(&ds, &unknown).is_err());
    }

    #[test]
    fn step_labels_propagate() {
        // Every control dies before any plausible index time is drawn.
        let mut recs = vec![
            record(0, Group::SingleArm, 5.0, true, 0.0, Some(3.0)),
            record(1, Group::SingleArm, 6.0, true, 1.0, Some(4.0)),
        ];
        recs.push(record(2, Group::Control, 1.0, true, 0.0, None));
        recs.push(record(3, Group::Control, 2.0, true, 1.0, None));
        let ds = Dataset::new(vec!["x".into()], recs).unwrap();
        let config = IdiConfig {
            adjustment: Adjustment::None,
            ..Default::default()
        };
        let err = run_idi_once(&ds, &config, &mut rng::stream(0, 0)).unwrap_err();
        assert!(err.to_string().starts_with("step 2"), "{err}");
    }
}
