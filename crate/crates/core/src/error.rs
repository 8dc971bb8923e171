//! Error taxonomy shared by every accounting operation.

/// Errors produced by accounting operations.
///
/// `InvalidParameter` covers domain violations detectable from arguments alone.
/// `GuaranteeNotSatisfied` means an input pair or curve fails a stated privacy
/// precondition. `AssumptionNotMet` carries the computed order cap so callers
/// can see how far the regime assumption missed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("guarantee not satisfied: {0}")]
    GuaranteeNotSatisfied(String),
    #[error("assumption not met: omega = {omega} but the bound requires omega >= {required}")]
    AssumptionNotMet { omega: f64, required: f64 },
    #[error("no common orders between the two curves")]
    NoCommonOrders,
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable kind tag (used by the CLI diagnostics).
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::GuaranteeNotSatisfied(_) => "guarantee-not-satisfied",
            Error::AssumptionNotMet { .. } => "assumption-not-met",
            Error::NoCommonOrders => "no-common-orders",
            Error::Parse(_) => "parse-error",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn unsatisfied(msg: impl Into<String>) -> Self {
        Error::GuaranteeNotSatisfied(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_are_stable() {
        assert_eq!(Error::invalid("x").kind(), "invalid-parameter");
        assert_eq!(Error::unsatisfied("x").kind(), "guarantee-not-satisfied");
        assert_eq!(
            Error::AssumptionNotMet { omega: 1.0, required: 4.0 }.kind(),
            "assumption-not-met"
        );
        assert_eq!(Error::NoCommonOrders.kind(), "no-common-orders");
    }
}
