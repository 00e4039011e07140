//! The distribution of time to treatment initiation in the untruncated
//! single-arm population, truncation probabilities, and the
//! inverse-truncation weights used in the propensity model.

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::surv::{fit_km_with, CoxFit, KmOptions, KmRecord};
use crate::{Error, Matrix, Result, StepFunction};

/// Atoms `(location, mass)` with strictly increasing locations and masses
/// summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    locations: Vec<f64>,
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution from weighted points, merging duplicate
    /// locations and normalising. Points with zero weight are dropped.
    pub fn from_weighted(points: &[(f64, f64)]) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 > 0.0).collect();
        if pts.is_empty() {
            return Err(Error::Empty("distribution atoms"));
        }
        if pts.iter().any(|(l, w)| !l.is_finite() || !w.is_finite()) {
            return Err(Error::Invalid("atoms must be finite".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut locations = Vec::new();
        let mut raw = Vec::new();
        for (loc, w) in pts {
            if locations.last() == Some(&loc) {
                *raw.last_mut().unwrap() += w;
            } else {
                locations.push(loc);
                raw.push(w);
            }
        }
        let total: f64 = raw.iter().sum();
        let masses: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mut cumulative = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for &m in &masses {
            acc += m;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self {
            locations,
            masses,
            cumulative,
        })
    }

    pub fn point_mass(location: f64) -> Self {
        Self {
            locations: vec![location],
            masses: vec![1.0],
            cumulative: vec![1.0],
        }
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locations.iter().copied().zip(self.masses.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn cdf(&self) -> StepFunction {
        StepFunction::new(self.locations.clone(), self.cumulative.clone(), 0.0)
            .expect("atoms are sorted")
    }

    /// `P(R <= t)`.
    pub fn cdf_at(&self, t: f64) -> f64 {
        let idx = self.locations.partition_point(|&l| l <= t);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// Inverse-CDF transform of `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let idx = self.cumulative.partition_point(|&c| c < u);
        self.locations[idx.min(self.locations.len() - 1)]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Stieltjes sum `sum_k mass_k f(location_k)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.atoms().map(|(l, m)| m * f(l)).sum()
    }
}

/// One single-arm subject as seen by the index-time estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexObservation {
    pub index_time: f64,
    pub y: f64,
    pub event: bool,
}

/// Left-truncated Kaplan–Meier estimate of survival from diagnosis in the
/// single-arm cohort (entry at the index time).
///
/// Factors that would exhaust the risk set before later subjects enter are
/// skipped; otherwise every later index time would get infinite weight.
pub fn single_arm_km(obs: &[IndexObservation]) -> Result<StepFunction> {
    let recs: Vec<KmRecord> = obs
        .iter()
        .map(|o| KmRecord::new(o.index_time, o.y, o.event))
        .collect();
    fit_km_with(
        &recs,
        KmOptions {
            skip_exhausted_risk_sets: true,
        },
    )
}

/// Estimate of the untruncated index-time distribution.
///
/// Each observed index time `r_i` carries mass proportional to
/// `1 / S_T(r_i-)`, with `S_T` the left-truncated Kaplan–Meier of survival
/// from diagnosis.
pub fn estimate_fr(obs: &[IndexObservation]) -> Result<DiscreteDistribution> {
    let km = single_arm_km(obs)?;
    estimate_fr_with(obs, &km)
}

/// As [`estimate_fr`], reusing an already fitted `S_T`.
pub fn estimate_fr_with(obs: &[IndexObservation], s_t: &StepFunction) -> Result<DiscreteDistribution> {
    if obs.is_empty() {
        return Err(Error::Empty("single-arm cohort"));
    }
    let points = obs
        .iter()
        .map(|o| {
            let s = s_t.left_limit(o.index_time);
            if s > 0.0 {
                Ok((o.index_time, 1.0 / s))
            } else {
                Err(Error::ZeroSurvival { time: o.index_time })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteDistribution::from_weighted(&points)
}

/// `P(T > R | x) = sum_k mass_k exp(-Lambda0(r_k) exp(theta' x))`.
pub fn truncation_probability(
    x: &[f64],
    fr: &DiscreteDistribution,
    fit: &CoxFit,
    cumhaz: &StepFunction,
) -> Result<f64> {
    TruncationModel::new(fr, fit, cumhaz).probability(x)
}

/// Truncation probabilities with the baseline cumulative hazard evaluated
/// once per atom.
pub struct TruncationModel<'a> {
    fit: &'a CoxFit,
    masses: &'a [f64],
    cumhaz_at_atoms: Vec<f64>,
}

impl<'a> TruncationModel<'a> {
    pub fn new(fr: &'a DiscreteDistribution, fit: &'a CoxFit, cumhaz: &StepFunction) -> Self {
        Self {
            fit,
            masses: fr.masses(),
            cumhaz_at_atoms: fr.locations().iter().map(|&r| cumhaz.eval(r)).collect(),
        }
    }

    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        let rr = self.fit.linear_predictor(x)?.exp();
        let p: f64 = self
            .masses
            .iter()
            .zip(&self.cumhaz_at_atoms)
            .map(|(m, h)| m * (-h * rr).exp())
            .sum();
        if p > 0.0 {
            Ok(p.min(1.0))
        } else {
            Err(Error::ZeroProbability("truncation"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaOptions {
    /// Upper bound applied to every weight.
    pub cap: Option<f64>,
    /// Weights above this are logged.
    pub warn_above: f64,
}

impl Default for ZetaOptions {
    fn default() -> Self {
        Self {
            cap: None,
            warn_above: 100.0,
        }
    }
}

/// Inverse truncation probabilities, aligned with the input rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationWeights(pub Vec<f64>);

impl TruncationWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `zeta_i = 1 / P(T > R | x_i)` for each row of `x`.
pub fn zeta_weights(
    x: &Matrix,
    fr: &DiscreteDistribution,
    fit: &CoxFit,
    cumhaz: &StepFunction,
    options: &ZetaOptions,
) -> Result<TruncationWeights> {
    let model = TruncationModel::new(fr, fit, cumhaz);
    let mut large = 0usize;
    let zeta = x
        .rows()
        .map(|row| {
            let mut z = 1.0 / model.probability(row)?;
            if z > options.warn_above {
                large += 1;
            }
            if let Some(cap) = options.cap {
                z = z.min(cap);
            }
            Ok(z)
        })
        .collect::<Result<Vec<_>>>()?;
    if large > 0 {
        warn!(
            "{large} truncation weights exceed {}; consider a cap",
            options.warn_above
        );
    }
    Ok(TruncationWeights(zeta))
}

/// Where `-dS_T` puts the mass left when `S_T` ends above zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalMass {
    /// Residual survival is an atom beyond the largest observed time.
    #[default]
    Residual,
    /// Drop the residual and renormalise by the mass actually placed.
    Renormalize,
}

/// Estimated CDF of `R` among subjects with `R < T`:
/// `P(R <= r, R < T) / P(R < T)`, with the numerator computed as
/// `-int F_R(min(r, t)-) dS_T(t)` over the drops of `S_T`.
pub fn truncated_fr(
    fr: &DiscreteDistribution,
    s_t: &StepFunction,
    terminal: TerminalMass,
) -> Result<StepFunction> {
    let denom = fr.integrate(|r| s_t.eval(r));
    let drops: Vec<(f64, f64)> = s_t.jumps().map(|(t, j)| (t, -j)).filter(|d| d.1 > 0.0).collect();
    let residual = match terminal {
        TerminalMass::Residual => s_t.terminal_value().max(0.0),
        TerminalMass::Renormalize => 0.0,
    };
    // F_R(t-) at each drop point.
    let before: Vec<f64> = drops
        .iter()
        .map(|&(t, _)| {
            let idx = fr.locations().partition_point(|&l| l < t);
            if idx == 0 {
                0.0
            } else {
                fr.cumulative[idx - 1]
            }
        })
        .collect();
    let joint = |r: f64| -> f64 {
        let f_r = fr.cdf_at(r);
        let mut acc = residual * f_r;
        for (&(t, d), &f_t) in drops.iter().zip(&before) {
            acc += d * if r < t { f_r } else { f_t };
        }
        acc
    };
    let norm = match terminal {
        TerminalMass::Residual => denom,
        TerminalMass::Renormalize => joint(f64::INFINITY),
    };
    if !(norm > 0.0) {
        return Err(Error::ZeroProbability("P(R < T)"));
    }
    let values: Vec<f64> = fr
        .locations()
        .iter()
        .map(|&r| (joint(r) / norm).min(1.0))
        .collect();
    StepFunction::new(fr.locations().to_vec(), values, 0.0)
}

/// Q–Q pairs `(model quantile, empirical quantile)` at probabilities
/// `(k - 0.5) / n`.
pub fn qq_points(truncated: &StepFunction, observed: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = observed.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let last = truncated.knots().last().copied().unwrap_or(0.0);
    sorted
        .iter()
        .enumerate()
        .map(|(k, &obs)| {
            let q = (k as f64 + 0.5) / n;
            (truncated.inverse(q).unwrap_or(last), obs)
        })
        .collect()
}
