use std::fmt;

use thiserror::Error;

use crate::model::RhoClass;

pub type Result<T> = std::result::Result<T, Error>;

/// One violated bound on a [`BrsParams`](crate::model::BrsParams) field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldViolation {
    pub field: &'static str,
    pub reason: String,
}

impl fmt::Display for FieldViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{func}: argument out of domain ({reason})")]
    Domain { func: &'static str, reason: String },

    #[error("invalid parameters: {}", join(.0))]
    InvalidParams(Vec<FieldViolation>),

    #[error("correlation rho = {rho} lies in the {class:?} branch; use the dedicated path")]
    DegenerateBranch { rho: f64, class: RhoClass },

    /// The joint law is concentrated on the diagonal r1 = r2 and has no finite density.
    #[error("rho = {rho} > 0.999: joint law collapses onto r1 = r2")]
    DiagonalCollapse { rho: f64 },

    #[error("quadrature did not converge: last two estimates {previous:e} and {last:e}")]
    Accuracy { previous: f64, last: f64 },

    #[error("{what} = {value:e} falls outside [0, 1] beyond numerical slack")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("MGF argument out of domain: {0}")]
    MgfDomain(String),

    #[error("zero variance: power correlation is undefined")]
    ZeroVariance,

    #[error("no level crossings at this threshold; average fade duration is unbounded")]
    NoCrossings,

    #[error("contract violation: {0}")]
    Contract(String),
}

fn join(items: &[FieldViolation]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn domain(func: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            func,
            reason: reason.into(),
        }
    }

    /// True for errors that come from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Accuracy { .. } | Error::OutOfRange { .. })
    }
}
