use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("risk set has zero weight at event time {time}")]
    EmptyRiskSet { time: f64 },

    #[error("no events with positive weight")]
    NoEvents,

    #[error("estimated survival is zero just before index time {time}; its weight is undefined")]
    ZeroSurvival { time: f64 },

    #[error("{0} probability is zero")]
    ZeroProbability(&'static str),

    #[error("monotone likelihood: coefficient {index} diverged to {value}")]
    Separation { index: usize, value: f64 },

    #[error("coefficient {index} is not identifiable (constant column)")]
    NonIdentifiable { index: usize },

    #[error("{0} information matrix is singular")]
    Singular(&'static str),

    #[error("{model} did not converge in {iterations} iterations")]
    NotConverged {
        model: &'static str,
        iterations: usize,
    },

    #[error("odds weight is infinite for control subject {subject}")]
    InfiniteWeight { subject: String },

    #[error("no control retained after index date imputation")]
    AllControlsFiltered,

    #[error("could not fill the cohort after {attempts} draws")]
    Generation { attempts: usize },

    #[error("{step}: {source}")]
    Step {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} replicates failed (first failure: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(step: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Step {
            step,
            source: Box::new(source),
        }
    }
}
