use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// How the pooled standard deviation counts subjects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Raw group sizes in the `(n_g - 1)` factors, even under weighting.
    #[default]
    RawCounts,
    /// Kish effective sample sizes `(sum w)^2 / sum w^2`.
    EffectiveSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub covariate: String,
    pub smd_before: f64,
    pub smd_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub rows: Vec<BalanceRow>,
    /// Effective sample size of the single-arm and control groups after weighting.
    pub ess_single_arm: f64,
    pub ess_control: f64,
}

impl BalanceReport {
    pub fn max_abs_after(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.smd_after.abs()))
    }
}

struct Moments {
    mean: f64,
    var: f64,
    n: f64,
    ess: f64,
}

fn weighted_moments(values: impl Iterator<Item = (f64, f64)> + Clone) -> Moments {
    let (mut sw, mut sw2, mut swx, mut n) = (0.0, 0.0, 0.0, 0.0);
    for (x, w) in values.clone() {
        sw += w;
        sw2 += w * w;
        swx += w * x;
        n += 1.0;
    }
    let mean = swx / sw;
    let var = values.map(|(x, w)| w * (x - mean) * (x - mean)).sum::<f64>() / sw;
    Moments {
        mean,
        var,
        n,
        ess: sw * sw / sw2,
    }
}

/// Standardized mean difference of one covariate, single-arm minus control,
/// with weighted means and weighted (1/sum w) variances.
///
/// A zero pooled SD yields 0 for equal means and `+inf` otherwise.
pub fn smd(values: &[f64], single_arm: &[bool], weights: &[f64], pooling: Pooling) -> Result<f64> {
    if values.len() != single_arm.len() || values.len() != weights.len() {
        return Err(Error::Dimension {
            expected: values.len(),
            found: single_arm.len().min(weights.len()),
        });
    }
    let group = |g: bool| {
        values
            .iter()
            .zip(single_arm)
            .zip(weights)
            .filter(move |((_, &s), _)| s == g)
            .map(|((&x, _), &w)| (x, w))
    };
    let total = |g: bool| group(g).map(|(_, w)| w).sum::<f64>();
    if !(total(true) > 0.0 && total(false) > 0.0) {
        return Err(Error::Invalid(
            "both groups need positive total weight for an SMD".into(),
        ));
    }
    let m1 = weighted_moments(group(true));
    let m0 = weighted_moments(group(false));
    let (n1, n0) = match pooling {
        Pooling::RawCounts => (m1.n, m0.n),
        Pooling::EffectiveSize => (m1.ess, m0.ess),
    };
    let pooled = (((n1 - 1.0) * m1.var + (n0 - 1.0) * m0.var) / (n1 + n0 - 2.0)).sqrt();
    let diff = m1.mean - m0.mean;
    Ok(if pooled > 0.0 {
        diff / pooled
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    })
}

/// SMDs of every column before (unit weights) and after (`weights`) adjustment.
pub fn smd_table(
    names: &[String],
    x: &Matrix,
    single_arm: &[bool],
    weights: &[f64],
    pooling: Pooling,
) -> Result<BalanceReport> {
    if names.len() != x.ncols() {
        return Err(Error::Dimension {
            expected: x.ncols(),
            found: names.len(),
        });
    }
    let unit = vec![1.0; x.nrows()];
    let rows = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = x.column(j).collect();
            Ok(BalanceRow {
                covariate: name.clone(),
                smd_before: smd(&col, single_arm, &unit, pooling)?,
                smd_after: smd(&col, single_arm, weights, pooling)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ess = |g: bool| {
        let (s, s2) = single_arm
            .iter()
            .zip(weights)
            .filter(|(&s, _)| s == g)
            .fold((0.0, 0.0), |(a, b), (_, &w)| (a + w, b + w * w));
        s * s / s2
    };
    Ok(BalanceReport {
        rows,
        ess_single_arm: ess(true),
        ess_control: ess(false),
    })
}
