mod oracles;

use idi_core::rng;
use idi_core::surv::{breslow_cumhaz, fit_cox, partial_likelihood, predict_survival, CoxData, CoxOptions};
use oracles::{cox_bruteforce, cox_loglik, random_cox_data, Obs};
use rand::Rng;

fn to_cox(data: &[Obs]) -> CoxData {
    let mut c = CoxData::new(data[0].x.len());
    for o in data {
        c.push(o.entry, o.exit, o.event, &o.x, o.w).unwrap();
    }
    c
}

#[test]
fn newton_matches_bruteforce_maximizer() {
    let mut r = rng::stream(2024, 1);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 50 {
        attempts += 1;
        assert!(attempts < 500, "too few usable datasets");
        let p = if checked % 2 == 0 { 1 } else { 2 };
        let data = random_cox_data(&mut r, p);
        let Ok(fit) = fit_cox(&to_cox(&data), &CoxOptions::default()) else {
            continue;
        };
        let Some(oracle) = cox_bruteforce(&data) else {
            continue;
        };
        assert!(fit.converged);
        for (a, b) in fit.theta.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-5, "theta {:?} vs oracle {:?}", fit.theta, oracle);
        }
        assert!((fit.loglik - cox_loglik(&data, &fit.theta)).abs() < 1e-9 * (1.0 + fit.loglik.abs()));
        checked += 1;
    }
}

#[test]
fn score_and_information_match_finite_differences() {
    let mut r = rng::stream(2024, 2);
    for case in 0..40 {
        let p = 1 + case % 3;
        let data = random_cox_data(&mut r, p);
        let cox = to_cox(&data);
        let theta: Vec<f64> = (0..p).map(|_| r.random_range(-1.0..1.0)).collect();
        let pl = partial_likelihood(&cox, &theta).unwrap();
        let h = 1e-5;
        for k in 0..p {
            let shifted = |d: f64| {
                let mut t = theta.clone();
                t[k] += d;
                t
            };
            let fd = (cox_loglik(&data, &shifted(h)) - cox_loglik(&data, &shifted(-h))) / (2.0 * h);
            let rel = (pl.score[k] - fd).abs() / fd.abs().max(1.0);
            assert!(rel < 1e-6, "case {case}: score {} vs fd {fd}", pl.score[k]);
            let up = partial_likelihood(&cox, &shifted(h)).unwrap();
            let down = partial_likelihood(&cox, &shifted(-h)).unwrap();
            for j in 0..p {
                let fd_info = -(up.score[j] - down.score[j]) / (2.0 * h);
                let an = pl.information[k * p + j];
                assert!((an - fd_info).abs() / an.abs().max(1.0) < 1e-5, "information ({k},{j})");
            }
        }
    }
}

#[test]
fn covariance_inverts_the_information_and_rescaling_is_harmless() {
    let mut r = rng::stream(2024, 3);
    let mut done = 0;
    while done < 20 {
        let data = random_cox_data(&mut r, 2);
        let Ok(fit) = fit_cox(&to_cox(&data), &CoxOptions::default()) else {
            continue;
        };
        let pl = partial_likelihood(&to_cox(&data), &fit.theta).unwrap();
        // covariance * information = identity
        for a in 0..2 {
            for b in 0..2 {
                let v: f64 = (0..2).map(|k| fit.covariance[a][k] * pl.information[k * 2 + b]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-8);
            }
        }
        let scaled: Vec<Obs> = data.iter().map(|o| Obs { w: o.w * 3.5, ..o.clone() }).collect();
        let fit2 = fit_cox(&to_cox(&scaled), &CoxOptions::default()).unwrap();
        for (a, b) in fit.theta.iter().zip(&fit2.theta) {
            assert!((a - b).abs() < 1e-8);
        }
        done += 1;
    }
}

#[test]
fn breslow_and_prediction_match_direct_summation() {
    let mut r = rng::stream(2024, 4);
    let mut done = 0;
    while done < 20 {
        let data = random_cox_data(&mut r, 1);
        let cox = to_cox(&data);
        let Ok(fit) = fit_cox(&cox, &CoxOptions::default()) else {
            continue;
        };
        let cumhaz = breslow_cumhaz(&fit, &cox).unwrap();
        let th = fit.theta[0];
        let direct = |t: f64| -> f64 {
            let mut times: Vec<f64> = data.iter().filter(|o| o.event && o.exit <= t).map(|o| o.exit).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            times
                .iter()
                .map(|&s| {
                    let d: f64 = data.iter().filter(|o| o.event && o.exit == s).map(|o| o.w).sum();
                    let risk: f64 = data
                        .iter()
                        .filter(|o| o.entry < s && s <= o.exit)
                        .map(|o| o.w * (th * o.x[0]).exp())
                        .sum();
                    d / risk
                })
                .sum()
        };
        let mut last = 1.0;
        for k in 0..=30 {
            let t = k as f64 * 0.2;
            let expect = direct(t);
            assert!((cumhaz.eval(t) - expect).abs() < 1e-10 * (1.0 + expect));
            let s = predict_survival(&fit, &cumhaz, &[0.7], t).unwrap();
            assert!((s - (-expect * (0.7 * th).exp()).exp()).abs() < 1e-10);
            assert!(s <= last + 1e-15);
            last = s;
        }
        done += 1;
    }
}
