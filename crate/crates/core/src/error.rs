use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violates a documented precondition.
    InvalidInput(&'static str),
    /// The input lies outside the domain of a closed-form expression.
    Domain(&'static str),
    /// An iterative stage stopped without reaching its acceptance condition.
    NotConverged {
        stage: &'static str,
        iterations: usize,
    },
    /// A numerical guard tripped, usually because the noise scale contradicts the data.
    Numerical(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::NotConverged { stage, iterations } => {
                write!(f, "{stage} did not converge after {iterations} iterations")
            }
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
