use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Law of the time from diagnosis to treatment initiation in the
/// single-arm population, before truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexTimeLaw {
    /// `R ~ U[lower, upper]`, independent of covariates.
    Uniform { lower: f64, upper: f64 },
    /// Exponential with hazard `rate * exp(coef1 * x1 + coef2 * x2)`.
    ExponentialHazard { rate: f64, coef1: f64, coef2: f64 },
    /// `R` fixed; `Constant { value: 0 }` removes the misalignment.
    Constant { value: f64 },
}

/// One simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    /// Single-arm subjects retained after truncation.
    pub n1: usize,
    pub n0: usize,
    /// Group-membership logit `(intercept, x1, x2)`.
    pub beta: [f64; 3],
    pub r_law: IndexTimeLaw,
    /// Baseline hazard of death.
    pub lambda0: f64,
    /// Log-hazard coefficients of `(x1, x2)`.
    pub gamma: [f64; 2],
    /// Log hazard ratio of treatment from `R` onwards.
    pub alpha: f64,
    /// Rate of the exponential censoring gaps.
    pub censor_rate: f64,
    /// SD of the unmeasured confounder; 0 disables it.
    #[serde(default)]
    pub sigma_omega: f64,
    #[serde(default = "one")]
    pub omega_coef_g: f64,
    #[serde(default = "one")]
    pub omega_coef_t: f64,
}

fn one() -> f64 {
    1.0
}

impl ScenarioParams {
    /// Index time independent of covariates, `R ~ U[0, 2]`.
    pub fn case1(alpha: f64) -> Self {
        Self {
            n1: 200,
            n0: 800,
            beta: [-0.5, 0.3, -0.2],
            r_law: IndexTimeLaw::Uniform {
                lower: 0.0,
                upper: 2.0,
            },
            lambda0: 0.3,
            gamma: [0.5, 0.5],
            alpha,
            censor_rate: 0.3,
            sigma_omega: 0.0,
            omega_coef_g: 1.0,
            omega_coef_t: 1.0,
        }
    }

    /// Index time depending on covariates through an exponential hazard.
    pub fn case2(alpha: f64) -> Self {
        Self {
            r_law: IndexTimeLaw::ExponentialHazard {
                rate: 0.5,
                coef1: -2.0,
                coef2: -2.0,
            },
            ..Self::case1(alpha)
        }
    }

    pub fn with_sizes(self, n1: usize, n0: usize) -> Self {
        Self { n1, n0, ..self }
    }

    pub fn with_confounder(self, sigma: f64) -> Self {
        Self {
            sigma_omega: sigma,
            ..self
        }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        if self.n1 == 0 || self.n0 == 0 {
            return bad("group sizes must be positive");
        }
        if !(self.lambda0 > 0.0 && self.censor_rate > 0.0) {
            return bad("rates must be positive");
        }
        if !(self.sigma_omega >= 0.0) {
            return bad("sigma_omega must be >= 0");
        }
        let finite = self.beta.iter().chain(&self.gamma).chain([&self.alpha, &self.omega_coef_g, &self.omega_coef_t]);
        if finite.into_iter().any(|v| !v.is_finite()) {
            return bad("coefficients must be finite");
        }
        match self.r_law {
            IndexTimeLaw::Uniform { lower, upper } if !(0.0 <= lower && lower < upper) => {
                bad("uniform index-time law needs 0 <= lower < upper")
            }
            IndexTimeLaw::ExponentialHazard { rate, .. } if !(rate > 0.0) => {
                bad("index-time rate must be positive")
            }
            IndexTimeLaw::Constant { value } if !(value >= 0.0) => bad("index time must be >= 0"),
            _ => Ok(()),
        }
    }
}
