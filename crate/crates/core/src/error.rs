use thiserror::Error;

/// Errors raised by the library. Every fallible operation returns [`Result`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An input is too short (or a count too small) for the operation.
    #[error("size error: {what} needs at least {min}, got {got}")]
    Size {
        what: &'static str,
        min: usize,
        got: usize,
    },

    /// No analytic Hoeffding decomposition exists for the requested pair.
    #[error("unsupported combination: kernel `{kernel}` with marginal `{marginal}`")]
    Unsupported { kernel: String, marginal: String },

    /// A discretized kernel matrix failed the symmetry check.
    #[error("discretized kernel is not symmetric (max defect {0:e})")]
    Asymmetric(f64),

    /// Plug-in parts were passed where population parts are required.
    #[error("{0} requires analytic Hoeffding parts, got empirical plug-in parts")]
    EmpiricalParts(&'static str),

    /// The degenerate component does not integrate to zero against the marginal.
    #[error("h2 is not degenerate: defect {0:e} exceeds tolerance")]
    NotDegenerate(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn require_len(what: &'static str, min: usize, got: usize) -> Result<()> {
    if got < min {
        Err(Error::Size { what, min, got })
    } else {
        Ok(())
    }
}
