use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A wavespeed profile breaches one of the standing assumptions on `c`.
    #[error("assumption {assumption} violated: {detail}")]
    AssumptionViolated {
        assumption: &'static str,
        detail: String,
    },

    /// Observation radius inside the perturbation region.
    #[error("radius R = {radius} must satisfy R > L = {support}")]
    RadiusInsidePerturbation { radius: f64, support: f64 },

    #[error("non-finite sample in {what}")]
    NonFinite { what: &'static str },

    #[error("grid needs {required} cells, cap is {cap} (h = {h}, extent = {extent})")]
    ResourceCap {
        required: usize,
        cap: usize,
        h: f64,
        extent: f64,
    },

    /// The explicit scheme blew up.
    #[error("numerical instability detected at step {step}")]
    Unstable { step: usize },

    #[error("no closed-form solution: {0}")]
    NoClosedForm(String),

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    /// The Gronwall hypothesis inequality fails at the reported time.
    #[error("integral inequality violated first at t = {t} (lhs {lhs}, rhs {rhs})")]
    InequalityViolated { t: f64, lhs: f64, rhs: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
