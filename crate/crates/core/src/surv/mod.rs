//! Survival estimators shared by every later stage.

mod cox;
mod km;

pub use cox::{
    breslow_cumhaz, fit_cox, partial_likelihood, predict_survival, CoxData, CoxFit, CoxOptions,
    PartialLikelihood,
};
pub use km::{fit_km, fit_km_with, KmOptions, KmRecord};
