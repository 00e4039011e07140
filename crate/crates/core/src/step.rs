use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Right-continuous piecewise-constant function of time.
///
/// `eval(t)` is the value attached to the last knot `<= t`, or
/// `initial_value` before the first knot. Survival curves, cumulative
/// hazards and discrete CDFs are all stored this way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    initial_value: f64,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, initial_value: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::Dimension {
                expected: knots.len(),
                found: values.len(),
            });
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("step knots must be strictly increasing".into()));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Invalid("step knots must be finite".into()));
        }
        Ok(Self {
            knots,
            values,
            initial_value,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            knots: Vec::new(),
            values: Vec::new(),
            initial_value: value,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k <= t);
        if idx == 0 {
            self.initial_value
        } else {
            self.values[idx - 1]
        }
    }

    /// Left limit `f(t-)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k < t);
        if idx == 0 {
            self.initial_value
        } else {
            self.values[idx - 1]
        }
    }

    /// Value after the last knot.
    pub fn terminal_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.initial_value)
    }

    /// Jump sizes `f(k) - f(k-)` at each knot.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut prev = self.initial_value;
        self.knots.iter().zip(&self.values).map(move |(&k, &v)| {
            let jump = v - prev;
            prev = v;
            (k, jump)
        })
    }

    /// Generalized inverse of a nondecreasing function: the smallest knot
    /// whose value reaches `q`. Returns `None` when `q` is never reached.
    pub fn inverse(&self, q: f64) -> Option<f64> {
        let idx = self.values.partition_point(|&v| v < q);
        self.knots.get(idx).copied()
    }
}
