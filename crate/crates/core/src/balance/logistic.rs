use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::stats::{ln_1p_exp, logistic};
use crate::{Error, Matrix, Result};

const STEP_TOL_FACTOR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub max_abs_coef: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 50,
            max_halvings: 10,
            max_abs_coef: 20.0,
        }
    }
}

/// Propensity model `P(G = 1 | x) = logistic(beta_0 + beta' x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    /// Intercept first.
    pub beta: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub loglik: f64,
    pub score_norm: f64,
    pub n_iter: usize,
    pub converged: bool,
}

impl LogisticFit {
    pub fn linear_predictor(&self, x: &[f64]) -> Result<f64> {
        if x.len() + 1 != self.beta.len() {
            return Err(Error::Dimension {
                expected: self.beta.len() - 1,
                found: x.len(),
            });
        }
        Ok(self.beta[0] + self.beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.linear_predictor(x).map(logistic)
    }
}

struct Eval {
    loglik: f64,
    score: Vec<f64>,
    info: Vec<f64>,
}

fn evaluate(x: &Matrix, labels: &[bool], weights: &[f64], beta: &[f64]) -> Eval {
    let q = beta.len();
    let mut loglik = 0.0;
    let mut score = vec![0.0; q];
    let mut info = vec![0.0; q * q];
    let mut z = vec![1.0; q];
    for i in 0..x.nrows() {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        z[1..].copy_from_slice(x.row(i));
        let eta: f64 = z.iter().zip(beta).map(|(a, b)| a * b).sum();
        let y = if labels[i] { 1.0 } else { 0.0 };
        loglik += w * (y * eta - ln_1p_exp(eta));
        let p = logistic(eta);
        let v = w * p * (1.0 - p);
        for a in 0..q {
            score[a] += w * (y - p) * z[a];
            for b in a..q {
                info[a * q + b] += v * z[a] * z[b];
            }
        }
    }
    for a in 0..q {
        for b in 0..a {
            info[a * q + b] = info[b * q + a];
        }
    }
    Eval {
        loglik,
        score,
        info,
    }
}

/// Weighted Bernoulli log-likelihood with its score and information at
/// `beta` (intercept first).
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticLikelihood {
    pub loglik: f64,
    pub score: Vec<f64>,
    /// Row-major `(p + 1) x (p + 1)`.
    pub information: Vec<f64>,
}

pub fn logistic_likelihood(
    x: &Matrix,
    labels: &[bool],
    weights: &[f64],
    beta: &[f64],
) -> Result<LogisticLikelihood> {
    if labels.len() != x.nrows() || weights.len() != x.nrows() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            found: labels.len().min(weights.len()),
        });
    }
    if beta.len() != x.ncols() + 1 {
        return Err(Error::Dimension {
            expected: x.ncols() + 1,
            found: beta.len(),
        });
    }
    let e = evaluate(x, labels, weights, beta);
    Ok(LogisticLikelihood {
        loglik: e.loglik,
        score: e.score,
        information: e.info,
    })
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximum weighted-likelihood logistic regression with intercept, fitted by
/// iteratively reweighted least squares (Newton steps with halving).
pub fn fit_weighted_logistic(
    x: &Matrix,
    labels: &[bool],
    weights: &[f64],
    options: &LogisticOptions,
) -> Result<LogisticFit> {
    let n = x.nrows();
    let q = x.ncols() + 1;
    if labels.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: labels.len(),
        });
    }
    if weights.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Invalid("weights must be finite and >= 0".into()));
    }
    if n < q {
        return Err(Error::Invalid(format!("need at least {q} rows, got {n}")));
    }
    let has = |label: bool| labels.iter().zip(weights).any(|(&l, &w)| l == label && w > 0.0);
    if !has(true) || !has(false) {
        return Err(Error::Invalid(
            "both labels need positive weight for a propensity model".into(),
        ));
    }

    let mut beta = vec![0.0; q];
    let mut cur = evaluate(x, labels, weights, &beta);
    let mut n_iter = 0;
    let mut converged = sup_norm(&cur.score) < options.tol;
    while !converged && n_iter < options.max_iter {
        n_iter += 1;
        let info = DMatrix::from_row_slice(q, q, &cur.info);
        let chol = info.cholesky().ok_or(Error::Singular("logistic"))?;
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
            let trial: Vec<f64> = beta
                .iter()
                .zip(step.iter())
                .map(|(b, s)| b + scale * s)
                .collect();
            if let Some((index, &value)) = trial
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || v.abs() > options.max_abs_coef)
            {
                return Err(Error::Separation { index, value });
            }
            let next = evaluate(x, labels, weights, &trial);
            if next.loglik >= cur.loglik - 1e-12 * (1.0 + cur.loglik.abs()) {
                accepted = Some((trial, next));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((b, next)) => {
                beta = b;
                cur = next;
                converged = sup_norm(&cur.score) < options.tol;
            }
            None => break,
        }
    }
    let covariance = DMatrix::from_row_slice(q, q, &cur.info)
        .cholesky()
        .ok_or(Error::Singular("logistic"))?
        .inverse();
    Ok(LogisticFit {
        beta,
        covariance: (0..q)
            .map(|a| (0..q).map(|b| covariance[(a, b)]).collect())
            .collect(),
        loglik: cur.loglik,
        score_norm: sup_norm(&cur.score),
        n_iter,
        converged,
    })
}

/// ATT weights: 1 for single-arm subjects, `p / (1 - p)` for controls.
///
/// `ids` names subjects in errors; pass an empty slice to use row numbers.
pub fn att_weights(fit: &LogisticFit, x: &Matrix, single_arm: &[bool], ids: &[String]) -> Result<Vec<f64>> {
    if single_arm.len() != x.nrows() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            found: single_arm.len(),
        });
    }
    x.rows()
        .zip(single_arm)
        .enumerate()
        .map(|(i, (row, &treated))| {
            if treated {
                return Ok(1.0);
            }
            // Odds computed as exp(eta) directly: p / (1 - p) loses precision near 1.
            let odds = fit.linear_predictor(row)?.exp();
            if odds.is_finite() {
                Ok(odds)
            } else {
                Err(Error::InfiniteWeight {
                    subject: ids.get(i).cloned().unwrap_or_else(|| format!("row {i}")),
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit_with_intercept(beta0: f64) -> LogisticFit {
        LogisticFit {
            beta: vec![beta0],
            covariance: vec![vec![1.0]],
            loglik: 0.0,
            score_norm: 0.0,
            n_iter: 0,
            converged: true,
        }
    }

    #[test]
    fn intercept_only_closed_form() {
        let x = Matrix::zeros(100, 0);
        let labels: Vec<bool> = (0..100).map(|i| i < 30).collect();
        let fit = fit_weighted_logistic(&x, &labels, &[1.0; 100], &LogisticOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.beta[0] - (30.0f64 / 70.0).ln()).abs() < 1e-10);
    }

    #[test]
    fn doubled_weights_same_beta() {
        let x = Matrix::new(6, 1, vec![0.1, 0.5, -0.3, 1.2, 0.8, -1.0]).unwrap();
        let labels = [true, false, false, true, true, false];
        let w1 = [1.0, 2.0, 0.5, 1.0, 1.5, 1.0];
        let w2 = w1.map(|w| 2.0 * w);
        let a = fit_weighted_logistic(&x, &labels, &w1, &LogisticOptions::default()).unwrap();
        let b = fit_weighted_logistic(&x, &labels, &w2, &LogisticOptions::default()).unwrap();
        for (u, v) in a.beta.iter().zip(&b.beta) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn separation_and_single_label() {
        let x = Matrix::new(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let err = fit_weighted_logistic(&x, &[false, false, true, true], &[1.0; 4], &LogisticOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::Separation { .. }), "{err:?}");
        assert!(fit_weighted_logistic(&x, &[true; 4], &[1.0; 4], &LogisticOptions::default()).is_err());
        // A label present only with zero weight does not count.
        assert!(fit_weighted_logistic(&x, &[true, true, true, false], &[1.0, 1.0, 1.0, 0.0], &LogisticOptions::default()).is_err());
    }

    #[test]
    fn odds_weights() {
        let x = Matrix::zeros(3, 0);
        let even = fit_with_intercept(0.0);
        let w = att_weights(&even, &x, &[false, true, false], &[]).unwrap();
        assert_eq!(w, vec![1.0, 1.0, 1.0]);
        let high = fit_with_intercept((0.8f64 / 0.2).ln());
        let w = att_weights(&high, &x, &[false, true, false], &[]).unwrap();
        assert!((w[0] - 4.0).abs() < 1e-12);
        assert_eq!(w[1], 1.0);
    }

    #[test]
    fn infinite_odds_names_subject() {
        let fit = fit_with_intercept(1000.0);
        let err = att_weights(&fit, &Matrix::zeros(1, 0), &[false], &["c7".into()]).unwrap_err();
        assert_eq!(err, Error::InfiniteWeight { subject: "c7".into() });
    }
}
