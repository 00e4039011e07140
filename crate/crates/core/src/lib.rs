//! Index date imputation for time-to-event comparisons between a single-arm
//! cohort and external controls.
//!
//! The crate is organised bottom-up:
//!
//! - [`surv`]: weighted left-truncated Kaplan–Meier, weighted Cox partial
//!   likelihood with Breslow ties, Breslow cumulative hazard.
//! - [`truncation`]: the untruncated index-time distribution, truncation
//!   probabilities and the inverse-truncation weights.
//! - [`balance`]: weighted logistic propensity model, ATT odds weights,
//!   nearest-neighbour matching and standardized mean differences.
//! - [`idi`]: the four-step imputation pipeline with bootstrap inference and
//!   the naive comparator.
//! - [`sim`]: data generators and the Monte Carlo study engine.
//!
//! All risk sets use the convention that a subject is at risk at `t` iff
//! `entry < t <= exit`.

pub mod balance;
pub mod error;
pub mod idi;
pub mod matrix;
pub mod record;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod step;
pub mod surv;
pub mod truncation;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use record::{Dataset, Group, SubjectRecord};
pub use step::StepFunction;
