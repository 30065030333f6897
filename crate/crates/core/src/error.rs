use thiserror::Error;

use crate::measure::Colour;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("measures live on different colour spaces")]
    SpaceMismatch,

    #[error("colour {0} does not belong to the colour space")]
    ColourMismatch(Colour),

    #[error("measure has zero total mass")]
    ZeroMass,

    #[error("replacement drives the mass at colour {0} below zero")]
    NegativeMass(Colour),

    #[error("test set is not in the declared test family of this space")]
    UnsupportedTestSet,

    #[error("measure is not on a product space")]
    NotProductSpace,

    #[error("measures have incomparable continuous structure")]
    Incomparable,

    #[error("kernel uniform {0} lies outside [0, 1]")]
    UniformOutOfRange(f64),

    #[error("split_uniform supports 1..=8 streams, got {0}")]
    SplitOutOfRange(usize),

    #[error("kernel returned a signed replacement but the urn declares no admissible set")]
    SignedWithoutAdmissibility,

    #[error("state after step {step} leaves the admissible set")]
    AdmissibilityViolated { step: usize },

    #[error("declared balance {declared} violated: replacement at {colour} has mass {actual}")]
    BalanceViolated {
        colour: Colour,
        declared: f64,
        actual: f64,
    },

    #[error("urn already has deterministic replacements")]
    AlreadyDeterministic,

    #[error("exact coupling only covers urns without removals")]
    RemovalsNotCoupled,

    #[error("coupling broken at step {step}: {reason}")]
    CouplingBroken { step: usize, reason: String },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("bin {bin} has expected count {expected} < 5")]
    UnderpopulatedBin { bin: usize, expected: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// The error with any step annotation removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }

    /// Step at which a runtime error occurred, when known.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::AtStep { step, .. } => Some(*step),
            Error::AdmissibilityViolated { step } => Some(*step),
            Error::CouplingBroken { step, .. } => Some(*step),
            _ => None,
        }
    }
}
