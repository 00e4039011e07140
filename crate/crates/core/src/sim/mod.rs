//! Simulation bench: data generators mirroring an externally controlled
//! single-arm trial and the Monte Carlo engine that scores the estimators.

mod generate;
mod params;
mod study;

pub use generate::{gen_population, sample_onset_time, true_marginal_effect};
pub use params::{IndexTimeLaw, ScenarioParams};
pub use study::{
    power_curve, power_from_replicates, run_mc_replicates, run_mc_study, summarize, McMetrics,
    McOptions, McReport, Method, MethodEstimate, PowerPoint, Replicate,
};
