use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Population membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    /// External control (G = 0).
    Control,
    /// Single-arm trial (G = 1).
    SingleArm,
}

impl Group {
    pub fn from_flag(flag: u8) -> Option<Self> {
        match flag {
            0 => Some(Group::Control),
            1 => Some(Group::SingleArm),
            _ => None,
        }
    }

    pub fn flag(self) -> u8 {
        match self {
            Group::Control => 0,
            Group::SingleArm => 1,
        }
    }

    pub fn indicator(self) -> f64 {
        f64::from(self.flag())
    }
}

/// One patient. Times are measured from diagnosis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    pub group: Group,
    /// Observed follow-up `min(T, C)`.
    pub y: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
    /// Time from diagnosis to treatment initiation; single-arm only.
    pub index_time: Option<f64>,
    pub weight: f64,
}

impl SubjectRecord {
    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.y.is_finite() && self.y >= 0.0) {
            return Err(Error::Invalid(format!(
                "subject {}: follow-up time must be finite and >= 0",
                self.id
            )));
        }
        if self.covariates.len() != p {
            return Err(Error::Dimension {
                expected: p,
                found: self.covariates.len(),
            });
        }
        if self.covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "subject {}: covariates must be finite",
                self.id
            )));
        }
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(Error::Invalid(format!(
                "subject {}: weight must be finite and >= 0",
                self.id
            )));
        }
        match (self.group, self.index_time) {
            (Group::Control, Some(_)) => Err(Error::Invalid(format!(
                "subject {}: control records carry no index time",
                self.id
            ))),
            (Group::SingleArm, None) => Err(Error::Invalid(format!(
                "subject {}: single-arm records need an index time",
                self.id
            ))),
            (Group::SingleArm, Some(r)) if !(r.is_finite() && r >= 0.0 && self.y >= r) => {
                Err(Error::Invalid(format!(
                    "subject {}: index time must satisfy 0 <= r <= y",
                    self.id
                )))
            }
            _ => Ok(()),
        }
    }
}

/// A cohort of subjects sharing one covariate layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub covariate_names: Vec<String>,
    pub records: Vec<SubjectRecord>,
}

impl Dataset {
    pub fn new(covariate_names: Vec<String>, records: Vec<SubjectRecord>) -> Result<Self> {
        let ds = Self {
            covariate_names,
            records,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.covariate_names.len();
        self.records.iter().try_for_each(|r| r.validate(p))
    }

    pub fn dim(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn group_count(&self, group: Group) -> usize {
        self.records.iter().filter(|r| r.group == group).count()
    }

    /// Positions of the named covariates.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.covariate_names
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::Invalid(format!("unknown covariate '{n}'")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(group: Group, y: f64, r: Option<f64>) -> SubjectRecord {
        SubjectRecord {
            id: "a".into(),
            group,
            y,
            event: true,
            covariates: vec![0.0],
            index_time: r,
            weight: 1.0,
        }
    }

    #[test]
    fn record_invariants() {
        assert!(rec(Group::SingleArm, 2.0, Some(1.0)).validate(1).is_ok());
        assert!(rec(Group::SingleArm, 2.0, None).validate(1).is_err());
        assert!(rec(Group::SingleArm, 1.0, Some(2.0)).validate(1).is_err());
        assert!(rec(Group::Control, 1.0, Some(0.5)).validate(1).is_err());
        assert!(rec(Group::Control, -1.0, None).validate(1).is_err());
        assert!(rec(Group::Control, 1.0, None).validate(2).is_err());
    }

    #[test]
    fn resolve_names() {
        let ds = Dataset::new(vec!["age".into(), "stage".into()], vec![]).unwrap();
        assert_eq!(ds.resolve(&["stage".into()]).unwrap(), vec![1]);
        assert!(ds.resolve(&["race".into()]).is_err());
    }
}
