use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, StepFunction};

const STEP_TOL_FACTOR: f64 = 1e-2;
const STALL_STEP_TOL: f64 = 1e-6;

/// Input to a Cox fit: one row per record, covariates stored row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoxData {
    p: usize,
    entry: Vec<f64>,
    exit: Vec<f64>,
    event: Vec<bool>,
    weight: Vec<f64>,
    x: Vec<f64>,
}

impl CoxData {
    pub fn new(p: usize) -> Self {
        Self {
            p,
            ..Default::default()
        }
    }

    pub fn with_capacity(p: usize, n: usize) -> Self {
        Self {
            p,
            entry: Vec::with_capacity(n),
            exit: Vec::with_capacity(n),
            event: Vec::with_capacity(n),
            weight: Vec::with_capacity(n),
            x: Vec::with_capacity(n * p),
        }
    }

    pub fn push(
        &mut self,
        entry: f64,
        exit: f64,
        event: bool,
        covariates: &[f64],
        weight: f64,
    ) -> Result<()> {
        if covariates.len() != self.p {
            return Err(Error::Dimension {
                expected: self.p,
                found: covariates.len(),
            });
        }
        if !(entry.is_finite() && exit.is_finite() && exit > entry) {
            return Err(Error::Invalid(format!(
                "record needs entry < exit, got ({entry}, {exit})"
            )));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::Invalid("weights must be finite and >= 0".into()));
        }
        self.entry.push(entry);
        self.exit.push(exit);
        self.event.push(event);
        self.weight.push(weight);
        self.x.extend_from_slice(covariates);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.exit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exit.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weight
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxOptions {
    /// Convergence threshold on the sup-norm of the score.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Any |coefficient| above this is treated as a monotone likelihood.
    pub max_abs_coef: f64,
}

impl Default for CoxOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 50,
            max_halvings: 10,
            max_abs_coef: 20.0,
        }
    }
}

/// A fitted proportional-hazards model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFit {
    /// Log hazard ratios.
    pub theta: Vec<f64>,
    /// Inverse observed information at `theta`.
    pub covariance: Vec<Vec<f64>>,
    pub loglik: f64,
    pub score_norm: f64,
    pub n_iter: usize,
    pub converged: bool,
}

impl CoxFit {
    pub fn se(&self, k: usize) -> f64 {
        self.covariance[k][k].sqrt()
    }

    /// Wald 95% interval for coefficient `k`.
    pub fn wald_ci(&self, k: usize) -> (f64, f64) {
        let half = 1.959963984540054 * self.se(k);
        (self.theta[k] - half, self.theta[k] + half)
    }

    pub fn linear_predictor(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.theta.len() {
            return Err(Error::Dimension {
                expected: self.theta.len(),
                found: x.len(),
            });
        }
        Ok(self.theta.iter().zip(x).map(|(b, v)| b * v).sum())
    }
}

/// Log partial likelihood with its first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialLikelihood {
    pub loglik: f64,
    pub score: Vec<f64>,
    /// Observed information (negative Hessian), row-major p x p.
    pub information: Vec<f64>,
}

/// Sort orders and event groups reused across Newton iterations.
struct Sweep {
    p: usize,
    /// Record indices by decreasing exit.
    by_exit: Vec<usize>,
    /// Record indices by decreasing entry.
    by_entry: Vec<usize>,
    /// Distinct event times, decreasing, with their slice of `event_idx`.
    times: Vec<(f64, usize, usize)>,
    event_idx: Vec<usize>,
    /// Covariates centered by their column means.
    xc: Vec<f64>,
    center: Vec<f64>,
}

impl Sweep {
    fn new(data: &CoxData) -> Self {
        let n = data.len();
        let p = data.p;
        let mut by_exit: Vec<usize> = (0..n).collect();
        by_exit.sort_by(|&a, &b| data.exit[b].total_cmp(&data.exit[a]));
        let mut by_entry: Vec<usize> = (0..n).collect();
        by_entry.sort_by(|&a, &b| data.entry[b].total_cmp(&data.entry[a]));

        let mut event_idx: Vec<usize> = by_exit
            .iter()
            .copied()
            .filter(|&i| data.event[i] && data.weight[i] > 0.0)
            .collect();
        event_idx.sort_by(|&a, &b| data.exit[b].total_cmp(&data.exit[a]).then(a.cmp(&b)));
        let mut times = Vec::new();
        let mut k = 0;
        while k < event_idx.len() {
            let t = data.exit[event_idx[k]];
            let start = k;
            while k < event_idx.len() && data.exit[event_idx[k]] == t {
                k += 1;
            }
            times.push((t, start, k));
        }

        let mut center = vec![0.0; p];
        if n > 0 {
            for i in 0..n {
                for (c, v) in center.iter_mut().zip(data.row(i)) {
                    *c += v;
                }
            }
            center.iter_mut().for_each(|c| *c /= n as f64);
        }
        let mut xc = data.x.clone();
        for row in xc.chunks_mut(p.max(1)).take(if p == 0 { 0 } else { n }) {
            for (v, c) in row.iter_mut().zip(&center) {
                *v -= c;
            }
        }
        Self {
            p,
            by_exit,
            by_entry,
            times,
            event_idx,
            xc,
            center,
        }
    }

    fn xrow(&self, i: usize) -> &[f64] {
        &self.xc[i * self.p..(i + 1) * self.p]
    }

    fn eta(&self, theta: &[f64], i: usize) -> f64 {
        self.xrow(i).iter().zip(theta).map(|(x, b)| x * b).sum()
    }

    /// Walks event times in decreasing order, maintaining the risk-set sums
    /// `S0 = sum w e^eta`, `S1 = sum w e^eta x`, and (when `second`) `S2`.
    /// `visit(t, group, s0, s1, s2)` is called once per event time.
    fn walk(
        &self,
        data: &CoxData,
        theta: &[f64],
        second: bool,
        mut visit: impl FnMut(f64, &[usize], f64, &[f64], &[f64]) -> Result<()>,
    ) -> Result<()> {
        let p = self.p;
        let n = data.len();
        let risk: Vec<f64> = (0..n)
            .map(|i| data.weight[i] * self.eta(theta, i).exp())
            .collect();
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![0.0; if second { p * p } else { 0 }];
        let (mut xi, mut ni) = (0, 0);

        let update = |i: usize, sign: f64, s0: &mut f64, s1: &mut [f64], s2: &mut [f64]| {
            let r = sign * risk[i];
            *s0 += r;
            let x = self.xrow(i);
            for a in 0..p {
                s1[a] += r * x[a];
                if second {
                    for b in a..p {
                        s2[a * p + b] += r * x[a] * x[b];
                    }
                }
            }
        };

        for &(t, start, end) in &self.times {
            while xi < n && data.exit[self.by_exit[xi]] >= t {
                update(self.by_exit[xi], 1.0, &mut s0, &mut s1, &mut s2);
                xi += 1;
            }
            while ni < n && data.entry[self.by_entry[ni]] >= t {
                update(self.by_entry[ni], -1.0, &mut s0, &mut s1, &mut s2);
                ni += 1;
            }
            let group = &self.event_idx[start..end];
            if s0 <= 0.0 {
                // Cancellation after removals; rebuild this risk set directly.
                let (mut d0, mut d1, mut d2) = (0.0, vec![0.0; p], vec![0.0; s2.len()]);
                for i in 0..n {
                    if data.entry[i] < t && t <= data.exit[i] {
                        update(i, 1.0, &mut d0, &mut d1, &mut d2);
                    }
                }
                if d0 <= 0.0 {
                    return Err(Error::EmptyRiskSet { time: t });
                }
                visit(t, group, d0, &d1, &d2)?;
            } else {
                visit(t, group, s0, &s1, &s2)?;
            }
        }
        Ok(())
    }
}

fn evaluate(data: &CoxData, sweep: &Sweep, theta: &[f64]) -> Result<PartialLikelihood> {
    let p = sweep.p;
    let mut loglik = 0.0;
    let mut score = vec![0.0; p];
    let mut info = vec![0.0; p * p];
    sweep.walk(data, theta, true, |_, group, s0, s1, s2| {
        let mut d = 0.0;
        for &i in group {
            let w = data.weight[i];
            d += w;
            loglik += w * sweep.eta(theta, i);
            for (u, x) in score.iter_mut().zip(sweep.xrow(i)) {
                *u += w * x;
            }
        }
        loglik -= d * s0.ln();
        for a in 0..p {
            let ma = s1[a] / s0;
            score[a] -= d * ma;
            for b in a..p {
                info[a * p + b] += d * (s2[a * p + b] / s0 - ma * s1[b] / s0);
            }
        }
        Ok(())
    })?;
    for a in 0..p {
        for b in 0..a {
            info[a * p + b] = info[b * p + a];
        }
    }
    Ok(PartialLikelihood {
        loglik,
        score,
        information: info,
    })
}

/// Weighted Breslow log partial likelihood, score and information at `theta`.
pub fn partial_likelihood(data: &CoxData, theta: &[f64]) -> Result<PartialLikelihood> {
    if theta.len() != data.p {
        return Err(Error::Dimension {
            expected: data.p,
            found: theta.len(),
        });
    }
    let sweep = Sweep::new(data);
    if sweep.times.is_empty() {
        return Err(Error::NoEvents);
    }
    evaluate(data, &sweep, theta)
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_identifiable(data: &CoxData) -> Result<()> {
    for k in 0..data.p {
        let mut seen: Option<f64> = None;
        let mut varies = false;
        for i in 0..data.len() {
            if data.weight[i] <= 0.0 {
                continue;
            }
            let v = data.x[i * data.p + k];
            match seen {
                None => seen = Some(v),
                Some(s) if s != v => {
                    varies = true;
                    break;
                }
                _ => {}
            }
        }
        if !varies {
            return Err(Error::NonIdentifiable { index: k });
        }
    }
    Ok(())
}

fn invert_spd(p: usize, m: &[f64], what: &'static str) -> Result<DMatrix<f64>> {
    let mat = DMatrix::from_row_slice(p, p, m);
    let chol = mat.cholesky().ok_or(Error::Singular(what))?;
    Ok(chol.inverse())
}

/// Newton–Raphson maximisation of the weighted Breslow partial likelihood
/// over left-truncated risk sets, starting from zero with step halving.
///
/// Running out of iterations returns a fit with `converged == false`.
pub fn fit_cox(data: &CoxData, options: &CoxOptions) -> Result<CoxFit> {
    let p = data.p;
    if data.is_empty() {
        return Err(Error::Empty("Cox input"));
    }
    let sweep = Sweep::new(data);
    if sweep.times.is_empty() {
        return Err(Error::NoEvents);
    }
    check_identifiable(data)?;

    let mut theta = vec![0.0; p];
    let mut cur = evaluate(data, &sweep, &theta)?;
    let mut n_iter = 0;
    let mut converged = sup_norm(&cur.score) < options.tol;
    while !converged && n_iter < options.max_iter {
        n_iter += 1;
        let info = DMatrix::from_row_slice(p, p, &cur.information);
        let chol = info.cholesky().ok_or(Error::Singular("Cox"))?;
        let step = chol.solve(&DVector::from_column_slice(&cur.score));
        // On large samples the score carries rounding noise above `tol`; a
        // Newton step this small cannot move the estimate any further.
        if step.amax() < STEP_TOL_FACTOR * options.tol {
            converged = true;
            break;
        }

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let trial: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(t, s)| t + scale * s)
                .collect();
            if let Some((index, &value)) = trial
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || v.abs() > options.max_abs_coef)
            {
                return Err(Error::Separation { index, value });
            }
            let next = evaluate(data, &sweep, &trial)?;
            // Near the optimum the likelihood change is below rounding; allow that slack.
            if next.loglik.is_finite() && next.loglik >= cur.loglik - 1e-12 * (1.0 + cur.loglik.abs()) {
                accepted = Some((trial, next));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((t, next)) => {
                theta = t;
                cur = next;
                converged = sup_norm(&cur.score) < options.tol;
            }
            // No ascent along the Newton direction: if the step is negligible
            // we are at the optimum to working precision, whatever the score
            // says.
            None => {
                let size = theta.iter().fold(1.0f64, |m, t| m.max(t.abs()));
                converged = step.amax() <= STALL_STEP_TOL * size;
                break;
            }
        }
    }

    let covariance = if p == 0 {
        DMatrix::zeros(0, 0)
    } else {
        invert_spd(p, &cur.information, "Cox")?
    };
    Ok(CoxFit {
        theta,
        covariance: (0..p)
            .map(|a| (0..p).map(|b| covariance[(a, b)]).collect())
            .collect(),
        loglik: cur.loglik,
        score_norm: sup_norm(&cur.score),
        n_iter,
        converged,
    })
}

/// Weighted Breslow estimate of the cumulative baseline hazard (at x = 0).
///
/// Jumps are `sum w_i delta_i / sum_{j at risk} w_j exp(theta' x_j)` at each
/// distinct event time.
pub fn breslow_cumhaz(fit: &CoxFit, data: &CoxData) -> Result<StepFunction> {
    if fit.theta.len() != data.p {
        return Err(Error::Dimension {
            expected: data.p,
            found: fit.theta.len(),
        });
    }
    let sweep = Sweep::new(data);
    // The sweep works with centered covariates; undo the centering here.
    let offset: f64 = fit.theta.iter().zip(&sweep.center).map(|(b, c)| b * c).sum();
    let scale = offset.exp();
    let mut jumps = Vec::with_capacity(sweep.times.len());
    sweep.walk(data, &fit.theta, false, |t, group, s0, _, _| {
        let d: f64 = group.iter().map(|&i| data.weight[i]).sum();
        jumps.push((t, d / (s0 * scale)));
        Ok(())
    })?;
    jumps.reverse();
    let mut knots = Vec::with_capacity(jumps.len());
    let mut values = Vec::with_capacity(jumps.len());
    let mut acc = 0.0;
    for (t, j) in jumps {
        acc += j;
        knots.push(t);
        values.push(acc);
    }
    StepFunction::new(knots, values, 0.0)
}

/// `P(T > r | x) = exp(-Lambda0(r) exp(theta' x))`.
pub fn predict_survival(fit: &CoxFit, cumhaz: &StepFunction, x: &[f64], r: f64) -> Result<f64> {
    let lp = fit.linear_predictor(x)?;
    Ok((-cumhaz.eval(r) * lp.exp()).exp())
}
