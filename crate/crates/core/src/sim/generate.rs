use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1, StandardNormal};

use super::params::{IndexTimeLaw, ScenarioParams};
use crate::rng::{self, StreamRng};
use crate::stats::logistic;
use crate::surv::{fit_cox, CoxData, CoxOptions};
use crate::{Dataset, Error, Group, Result, SubjectRecord};

/// Draws per requested subject before generation gives up.
const MAX_DRAWS_PER_SUBJECT: usize = 1000;

/// Inverse-CDF draw from the piecewise-exponential law with hazard `rate`
/// before `change_at` and `rate * exp(log_hr)` after it, given a unit
/// exponential `e`.
pub fn sample_onset_time(rate: f64, change_at: f64, log_hr: f64, e: f64) -> f64 {
    let before = rate * change_at;
    if e < before {
        e / rate
    } else {
        change_at + (e - before) / (rate * log_hr.exp())
    }
}

struct Draw {
    x1: f64,
    x2: f64,
    omega: f64,
    single_arm: bool,
}

fn draw_subject<R: Rng + ?Sized>(p: &ScenarioParams, rng: &mut R) -> Draw {
    let x1 = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
    let z: f64 = StandardNormal.sample(rng);
    let x2 = 0.3 * z;
    // Skipping the draw entirely when the confounder is off keeps the
    // stream, and hence the data, identical to the base generator.
    let omega = if p.sigma_omega > 0.0 {
        let w: f64 = StandardNormal.sample(rng);
        p.sigma_omega * w
    } else {
        0.0
    };
    let eta = p.beta[0] + p.beta[1] * x1 + p.beta[2] * x2 + p.omega_coef_g * omega;
    let single_arm = rng.random::<f64>() < logistic(eta);
    Draw {
        x1,
        x2,
        omega,
        single_arm,
    }
}

fn hazard(p: &ScenarioParams, d: &Draw) -> f64 {
    p.lambda0 * (p.gamma[0] * d.x1 + p.gamma[1] * d.x2 + p.omega_coef_t * d.omega).exp()
}

fn draw_index_time<R: Rng + ?Sized>(law: IndexTimeLaw, d: &Draw, rng: &mut R) -> f64 {
    match law {
        IndexTimeLaw::Uniform { lower, upper } => rng.random_range(lower..upper),
        IndexTimeLaw::ExponentialHazard { rate, coef1, coef2 } => {
            let e: f64 = Exp1.sample(rng);
            e / (rate * (coef1 * d.x1 + coef2 * d.x2).exp())
        }
        IndexTimeLaw::Constant { value } => value,
    }
}

/// One simulated cohort: `n1` single-arm subjects who survived to treatment
/// initiation and `n0` external controls.
///
/// Subjects are drawn from the joint covariate/group law and kept until each
/// group's quota is filled; single-arm draws with `T <= R` are discarded.
pub fn gen_population<R: Rng + ?Sized>(p: &ScenarioParams, rng: &mut R) -> Result<Dataset> {
    p.validate()?;
    let censor = Exp::new(p.censor_rate).map_err(|e| Error::Invalid(e.to_string()))?;
    let budget = MAX_DRAWS_PER_SUBJECT * (p.n1 + p.n0);
    let mut singles = Vec::with_capacity(p.n1);
    let mut controls = Vec::with_capacity(p.n0);
    let mut draws = 0;
    while singles.len() < p.n1 || controls.len() < p.n0 {
        if draws == budget {
            return Err(Error::Generation { attempts: draws });
        }
        draws += 1;
        let d = draw_subject(p, rng);
        let rate = hazard(p, &d);
        if d.single_arm {
            if singles.len() == p.n1 {
                continue;
            }
            let r = draw_index_time(p.r_law, &d, rng);
            let t = sample_onset_time(rate, r, p.alpha, Exp1.sample(rng));
            if t <= r {
                continue;
            }
            let c = r + censor.sample(rng);
            singles.push((d, t.min(c), t <= c, Some(r)));
        } else {
            if controls.len() == p.n0 {
                continue;
            }
            let e: f64 = Exp1.sample(rng);
            let t = e / rate;
            let c = censor.sample(rng);
            controls.push((d, t.min(c), t <= c, None));
        }
    }
    let records = singles
        .into_iter()
        .map(|s| (Group::SingleArm, s))
        .chain(controls.into_iter().map(|c| (Group::Control, c)))
        .enumerate()
        .map(|(k, (group, (d, y, event, index_time)))| SubjectRecord {
            id: format!("s{}", k + 1),
            group,
            y,
            event,
            covariates: vec![d.x1, d.x2],
            index_time,
            weight: 1.0,
        })
        .collect();
    Dataset::new(vec!["x1".into(), "x2".into()], records)
}

/// Marginal log hazard ratio targeted by the estimators.
///
/// Simulates the single-arm population without censoring, keeps subjects
/// alive at treatment initiation, and builds both counterfactual aligned
/// times from the same unit exponential: with and without the treatment
/// effect after `R`. Because the draws coincide up to `R`, both arms condition
/// on the same event `T > R`. A Cox model of aligned time on the arm
/// indicator then gives the truth.
pub fn true_marginal_effect(p: &ScenarioParams, oracle_n: usize, seed: u64) -> Result<f64> {
    p.validate()?;
    if oracle_n == 0 {
        return Err(Error::Invalid("oracle_n must be positive".into()));
    }
    if p.alpha == 0.0 {
        return Ok(0.0);
    }
    let mut rng: StreamRng = rng::stream(seed, u64::MAX);
    let mut data = CoxData::with_capacity(1, 2 * oracle_n);
    let budget = MAX_DRAWS_PER_SUBJECT * oracle_n;
    let mut accepted = 0;
    let mut draws = 0;
    while accepted < oracle_n {
        if draws == budget {
            return Err(Error::Generation { attempts: draws });
        }
        draws += 1;
        let d = draw_subject(p, &mut rng);
        if !d.single_arm {
            continue;
        }
        let rate = hazard(p, &d);
        let r = draw_index_time(p.r_law, &d, &mut rng);
        let e: f64 = Exp1.sample(&mut rng);
        let residual = e - rate * r;
        if residual <= 0.0 {
            continue;
        }
        accepted += 1;
        data.push(0.0, residual / (rate * p.alpha.exp()), true, &[1.0], 1.0)?;
        data.push(0.0, residual / rate, true, &[0.0], 1.0)?;
    }
    let fit = fit_cox(&data, &CoxOptions::default())?;
    if !fit.converged {
        return Err(Error::NotConverged {
            model: "oracle Cox model",
            iterations: fit.n_iter,
        });
    }
    Ok(fit.theta[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_distance, mean, sd};

    #[test]
    fn onset_sampler_matches_closed_form_survival() {
        let (rate, r, alpha) = (0.4, 1.5, -1.0);
        let n = 100_000;
        let mut rng = rng::stream(11, 0);
        let t: Vec<f64> = (0..n)
            .map(|_| sample_onset_time(rate, r, alpha, Exp1.sample(&mut rng)))
            .collect();
        for &q in &[0.5, 1.0, 2.0, 3.0, 5.0, 8.0] {
            let exact = if q <= r {
                (-rate * q).exp()
            } else {
                (-rate * r - rate * alpha.exp() * (q - r)).exp()
            };
            let emp = t.iter().filter(|&&v| v > q).count() as f64 / n as f64;
            assert!((emp - exact).abs() < 0.01, "t={q}: {emp} vs {exact}");
        }
    }

    #[test]
    fn residual_after_change_point_is_memoryless() {
        let (rate, r, alpha) = (0.3, 1.0, -0.5);
        let mut rng = rng::stream(12, 0);
        let mut residuals = Vec::new();
        while residuals.len() < 100_000 {
            let t = sample_onset_time(rate, r, alpha, Exp1.sample(&mut rng));
            if t > r {
                residuals.push(t - r);
            }
        }
        let est = 1.0 / mean(&residuals);
        let exact = rate * alpha.exp();
        assert!((est / exact - 1.0).abs() < 0.01, "{est} vs {exact}");
    }

    #[test]
    fn quotas_and_truncation_hold() {
        let p = ScenarioParams::case1(-0.5).with_sizes(150, 400);
        let ds = gen_population(&p, &mut rng::stream(3, 0)).unwrap();
        assert_eq!(ds.group_count(Group::SingleArm), 150);
        assert_eq!(ds.group_count(Group::Control), 400);
        for rec in &ds.records {
            match rec.group {
                Group::SingleArm => {
                    let r = rec.index_time.unwrap();
                    assert!((0.0..2.0).contains(&r) && rec.y > r);
                }
                Group::Control => assert!(rec.index_time.is_none()),
            }
        }
    }

    #[test]
    fn covariate_and_group_marginals() {
        let p = ScenarioParams::case1(0.0);
        let n = 100_000;
        let mut rng = rng::stream(5, 0);
        let draws: Vec<Draw> = (0..n).map(|_| draw_subject(&p, &mut rng)).collect();
        let x1: Vec<f64> = draws.iter().map(|d| d.x1).collect();
        let x2: Vec<f64> = draws.iter().map(|d| d.x2).collect();
        let g: Vec<f64> = draws.iter().map(|d| f64::from(u8::from(d.single_arm))).collect();
        let se = |var: f64| (var / n as f64).sqrt();
        assert!((mean(&x1) - 0.5).abs() < 3.0 * se(0.25));
        // SD of a sample SD is about sigma / sqrt(2n).
        assert!((sd(&x2) - 0.3).abs() < 3.0 * 0.3 / (2.0 * n as f64).sqrt());
        // Expected share, integrating x2 numerically.
        let mut expected = 0.0;
        let (m, h) = (4000, 12.0 / 4000.0);
        for x1 in [0.0, 1.0] {
            for k in 0..m {
                let z = -6.0 + (k as f64 + 0.5) * h;
                let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                expected += 0.5 * h * phi * logistic(-0.5 + 0.3 * x1 - 0.2 * 0.3 * z);
            }
        }
        assert!((mean(&g) - expected).abs() < 3.0 * se(expected * (1.0 - expected)));
    }

    #[test]
    fn uniform_index_time_before_truncation() {
        let p = ScenarioParams::case1(0.0);
        let mut rng = rng::stream(6, 0);
        let d = draw_subject(&p, &mut rng);
        let r: Vec<f64> = (0..100_000).map(|_| draw_index_time(p.r_law, &d, &mut rng)).collect();
        let ks = ks_distance(&r, |x| (x / 2.0).clamp(0.0, 1.0));
        // Kolmogorov 1% critical value at n = 1e5.
        assert!(ks < 1.63 / (100_000f64).sqrt(), "{ks}");
    }

    #[test]
    fn zero_confounder_is_bit_identical() {
        let base = ScenarioParams::case1(-1.0).with_sizes(50, 100);
        let sens = base.clone().with_confounder(0.0);
        let sens = ScenarioParams {
            omega_coef_g: 3.0,
            omega_coef_t: -2.0,
            ..sens
        };
        let a = gen_population(&base, &mut rng::stream(9, 1)).unwrap();
        let b = gen_population(&sens, &mut rng::stream(9, 1)).unwrap();
        assert_eq!(a, b);
        let c = gen_population(&base.with_confounder(0.5), &mut rng::stream(9, 1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn oracle_truth_is_zero_without_effect_and_stable() {
        let p = ScenarioParams::case1(0.0);
        assert_eq!(true_marginal_effect(&p, 1000, 1).unwrap(), 0.0);
        let p = p.with_alpha(-1.0);
        let a = true_marginal_effect(&p, 100_000, 1).unwrap();
        let b = true_marginal_effect(&p, 100_000, 2).unwrap();
        assert!(a < -0.5 && a > -1.0, "{a}");
        assert!((a - b).abs() < 0.03, "{a} {b}");
    }
}
