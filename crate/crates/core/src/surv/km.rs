use crate::{Error, Result, StepFunction};

/// One observation for the product-limit estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmRecord {
    pub entry: f64,
    pub exit: f64,
    pub event: bool,
    pub weight: f64,
}

impl KmRecord {
    pub fn new(entry: f64, exit: f64, event: bool) -> Self {
        Self {
            entry,
            exit,
            event,
            weight: 1.0,
        }
    }

    pub fn weighted(self, weight: f64) -> Self {
        Self { weight, ..self }
    }
}

/// Variants of the product-limit estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KmOptions {
    /// Under delayed entry the whole risk set can fail before later subjects
    /// enter, which sets the estimate to zero for good. When enabled, such
    /// risk-set-exhausting factors are skipped while entries are still to
    /// come (in the spirit of Lai and Ying's modified product-limit).
    pub skip_exhausted_risk_sets: bool,
}

/// Weighted product-limit estimate with delayed entry.
///
/// At each event time `t_k` the factor is `1 - d_k / n_k`, where `d_k` is the
/// event weight at `t_k` and `n_k` the weight of records with
/// `entry < t_k <= exit`. The result has knots only at event times carrying
/// positive weight and starts at 1.
pub fn fit_km(records: &[KmRecord]) -> Result<StepFunction> {
    fit_km_with(records, KmOptions::default())
}

/// As [`fit_km`], with estimator options.
pub fn fit_km_with(records: &[KmRecord], options: KmOptions) -> Result<StepFunction> {
    if records.is_empty() {
        return Err(Error::Empty("Kaplan-Meier input"));
    }
    for r in records {
        if !(r.entry.is_finite() && r.exit.is_finite() && r.exit > r.entry) {
            return Err(Error::Invalid(format!(
                "record needs entry < exit, got ({}, {})",
                r.entry, r.exit
            )));
        }
        if !(r.weight.is_finite() && r.weight >= 0.0) {
            return Err(Error::Invalid("weights must be finite and >= 0".into()));
        }
    }

    let mut events: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.event && r.weight > 0.0)
        .map(|r| (r.exit, r.weight))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut entries: Vec<(f64, f64)> = records.iter().map(|r| (r.entry, r.weight)).collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut exits: Vec<(f64, f64)> = records.iter().map(|r| (r.exit, r.weight)).collect();
    exits.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0;
    // Running weight of records that have entered (entry < t) and left (exit < t).
    let (mut entered, mut left) = (0.0, 0.0);
    let (mut ni, mut xi) = (0, 0);
    let mut k = 0;
    while k < events.len() {
        let t = events[k].0;
        let mut d = 0.0;
        while k < events.len() && events[k].0 == t {
            d += events[k].1;
            k += 1;
        }
        while ni < entries.len() && entries[ni].0 < t {
            entered += entries[ni].1;
            ni += 1;
        }
        while xi < exits.len() && exits[xi].0 < t {
            left += exits[xi].1;
            xi += 1;
        }
        let at_risk = entered - left;
        if at_risk <= 0.0 {
            return Err(Error::EmptyRiskSet { time: t });
        }
        let exhausted = d >= at_risk * (1.0 - 1e-12);
        if exhausted && options.skip_exhausted_risk_sets && ni < entries.len() {
            continue;
        }
        surv *= (1.0 - d / at_risk).max(0.0);
        knots.push(t);
        values.push(surv);
    }
    StepFunction::new(knots, values, 1.0)
}
