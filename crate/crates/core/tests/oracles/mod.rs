//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's estimators.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// One row of a small survival dataset.
#[derive(Debug, Clone)]
pub struct Obs {
    pub entry: f64,
    pub exit: f64,
    pub event: bool,
    pub x: Vec<f64>,
    pub w: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn event_times(data: &[Obs]) -> Vec<f64> {
    let mut t: Vec<f64> = data.iter().filter(|o| o.event && o.w > 0.0).map(|o| o.exit).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Breslow partial log-likelihood by direct enumeration of risk sets.
pub fn cox_loglik(data: &[Obs], theta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for t in event_times(data) {
        let mut d = 0.0;
        let mut lin = 0.0;
        let mut risk = 0.0;
        for o in data {
            if o.entry < t && t <= o.exit {
                risk += o.w * dot(theta, &o.x).exp();
            }
            if o.event && o.exit == t {
                d += o.w;
                lin += o.w * dot(theta, &o.x);
            }
        }
        ll += lin - d * risk.ln();
    }
    ll
}

/// Derivative of [`cox_loglik`] in coordinate `k`, also by enumeration.
pub fn cox_dloglik(data: &[Obs], theta: &[f64], k: usize) -> f64 {
    let mut g = 0.0;
    for t in event_times(data) {
        let (mut d, mut sx, mut s0, mut s1) = (0.0, 0.0, 0.0, 0.0);
        for o in data {
            if o.entry < t && t <= o.exit {
                let r = o.w * dot(theta, &o.x).exp();
                s0 += r;
                s1 += r * o.x[k];
            }
            if o.event && o.exit == t {
                d += o.w;
                sx += o.w * o.x[k];
            }
        }
        g += sx - d * s1 / s0;
    }
    g
}

pub const GRID_LO: f64 = -8.0;
pub const GRID_HI: f64 = 8.0;
const GRID_STEP: f64 = 0.1;

/// Maximizer of a concave function on the grid, refined by bisection on its
/// derivative. `None` if the maximum sits on the grid boundary.
pub fn grid_bisect(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Option<f64> {
    let n = ((GRID_HI - GRID_LO) / GRID_STEP).round() as usize;
    let best = (0..=n)
        .map(|i| GRID_LO + i as f64 * GRID_STEP)
        .map(|t| (t, f(t)))
        .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    if best.0 <= GRID_LO + 0.5 * GRID_STEP || best.0 >= GRID_HI - 0.5 * GRID_STEP {
        return None;
    }
    let (mut lo, mut hi) = (best.0 - GRID_STEP, best.0 + GRID_STEP);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if df(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Brute-force maximizer of the partial likelihood for `p <= 2`.
pub fn cox_bruteforce(data: &[Obs]) -> Option<Vec<f64>> {
    match data[0].x.len() {
        1 => grid_bisect(|t| cox_loglik(data, &[t]), |t| cox_dloglik(data, &[t], 0)).map(|t| vec![t]),
        2 => {
            // Profile out the second coordinate; by the envelope theorem the
            // profile's derivative is the partial derivative at the inner optimum.
            let inner = |a: f64| {
                grid_bisect(
                    |b| cox_loglik(data, &[a, b]),
                    |b| cox_dloglik(data, &[a, b], 1),
                )
            };
            let profile = |a: f64| inner(a).map_or(f64::NEG_INFINITY, |b| cox_loglik(data, &[a, b]));
            let dprofile = |a: f64| inner(a).map_or(0.0, |b| cox_dloglik(data, &[a, b], 0));
            let a = grid_bisect(profile, dprofile)?;
            Some(vec![a, inner(a)?])
        }
        _ => None,
    }
}

/// A random small dataset with optional delayed entry, ties and weights.
pub fn random_cox_data<R: Rng>(rng: &mut R, p: usize) -> Vec<Obs> {
    let n = rng.random_range(8..=20);
    let delayed = rng.random_bool(0.5);
    let ties = rng.random_bool(0.4);
    let weighted = rng.random_bool(0.5);
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..p)
                .map(|k| {
                    if k == 0 && rng.random_bool(0.3) {
                        f64::from(u8::from(rng.random_bool(0.5)))
                    } else {
                        StandardNormal.sample(rng)
                    }
                })
                .collect();
            let entry = if delayed { rng.random_range(0.0..0.5) } else { 0.0 };
            let e: f64 = Exp1.sample(rng);
            let mut exit = entry + e / dot(&beta, &x).exp();
            if ties {
                exit = entry + ((exit - entry) * 4.0).ceil() / 4.0;
            }
            Obs {
                entry,
                exit,
                event: rng.random_bool(0.75),
                x,
                w: if weighted { rng.random_range(0.5..2.0) } else { 1.0 },
            }
        })
        .collect()
}

/// Product-limit estimate at `t` by enumeration.
pub fn km_at(data: &[(f64, f64, bool, f64)], t: f64) -> f64 {
    let mut times: Vec<f64> = data.iter().filter(|d| d.2 && d.3 > 0.0 && d.1 <= t).map(|d| d.1).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .into_iter()
        .map(|s| {
            let at_risk: f64 = data.iter().filter(|d| d.0 < s && s <= d.1).map(|d| d.3).sum();
            let dead: f64 = data.iter().filter(|d| d.2 && d.1 == s).map(|d| d.3).sum();
            1.0 - dead / at_risk
        })
        .product()
}

/// Greedy 1:1 matching written from the definition: treated in descending
/// score order, each takes the nearest unused control on the logit scale,
/// lowest index on ties, optionally within `max_dist`.
pub fn greedy_match(ps: &[f64], treated: &[bool], max_dist: Option<f64>) -> Vec<(usize, usize)> {
    let logit = |p: f64| (p / (1.0 - p)).ln();
    let mut order: Vec<usize> = (0..ps.len()).filter(|&i| treated[i]).collect();
    order.sort_by(|&a, &b| ps[b].total_cmp(&ps[a]).then(a.cmp(&b)));
    let mut used = vec![false; ps.len()];
    let mut pairs = Vec::new();
    for t in order {
        let mut best: Option<(f64, usize)> = None;
        for c in 0..ps.len() {
            if treated[c] || used[c] {
                continue;
            }
            let d = (logit(ps[t]) - logit(ps[c])).abs();
            if best.is_none() || d < best.unwrap().0 {
                best = Some((d, c));
            }
        }
        if let Some((d, c)) = best {
            if max_dist.is_none_or(|m| d <= m) {
                used[c] = true;
                pairs.push((t, c));
            }
        }
    }
    pairs
}

/// Weighted Bernoulli log-likelihood with intercept.
pub fn logistic_loglik(x: &[Vec<f64>], y: &[bool], w: &[f64], beta: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((xi, &yi), &wi)| {
            let eta = beta[0] + dot(&beta[1..], xi);
            let ll = if yi { -(1.0 + (-eta).exp()).ln() } else { -(1.0 + eta.exp()).ln() };
            wi * ll
        })
        .sum()
}

/// Cyclic coordinate ascent with golden-section line searches; slow but
/// generic.
pub fn maximize_coordinatewise(f: impl Fn(&[f64]) -> f64, dim: usize, sweeps: usize) -> Vec<f64> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut b = vec![0.0; dim];
    let mut radius = 4.0;
    for _ in 0..sweeps {
        for k in 0..dim {
            let (mut lo, mut hi) = (b[k] - radius, b[k] + radius);
            let eval = |v: f64, b: &mut Vec<f64>| {
                let old = b[k];
                b[k] = v;
                let r = f(b);
                b[k] = old;
                r
            };
            for _ in 0..100 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                if eval(m1, &mut b) < eval(m2, &mut b) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            b[k] = 0.5 * (lo + hi);
        }
        radius = (radius * 0.5).max(1e-3);
    }
    b
}

/// `P(Y > R)` for `Y ~ Exp(rate)` and `R` on weighted atoms.
pub fn exp_exceeds_atoms(rate: f64, atoms: &[(f64, f64)]) -> f64 {
    atoms.iter().map(|&(r, m)| m * (-rate * r).exp()).sum()
}

/// Midpoint-rule expectation of `f(z)` for `z ~ N(0, 1)`.
pub fn normal_expectation(f: impl Fn(f64) -> f64) -> f64 {
    let (m, lo, hi) = (2000, -8.0, 8.0);
    let h = (hi - lo) / m as f64;
    (0..m)
        .map(|k| {
            let z = lo + (k as f64 + 0.5) * h;
            h * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt() * f(z)
        })
        .sum()
}
