//! Confounding adjustment between the single-arm cohort and external
//! controls: propensity model, ATT odds weights, matching, and balance
//! diagnostics.

mod logistic;
mod matching;
mod smd;

pub use logistic::{
    att_weights, fit_weighted_logistic, logistic_likelihood, LogisticFit, LogisticLikelihood, LogisticOptions,
};
pub use matching::{nn_match, MatchOptions, Matching};
pub use smd::{smd, smd_table, BalanceReport, BalanceRow, Pooling};
