use thiserror::Error;

/// Errors raised by every computation in the crate.
///
/// Variants map onto the CLI exit codes: argument and precondition failures
/// exit with 2, budget overruns with 3, numerical failures with 4.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("outside the theorem's hypotheses: {0}")]
    OutOfTheorem(String),

    #[error("resource limit: {what} needs {required} entries, budget allows {budget}")]
    ResourceLimit {
        what: &'static str,
        required: u64,
        budget: u64,
    },

    #[error("sample count {samples} aliases a trigonometric polynomial of degree {degree}")]
    Aliasing { samples: u64, degree: u64 },

    #[error("quadrature did not converge: achieved error {achieved:.3e}, target {target:.3e}")]
    Nonconvergence { achieved: f64, target: f64 },

    #[error("least-squares design matrix is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("series diverges: exponent {0} must exceed 1")]
    Divergent(f64),

    #[error("missing coefficients for modulus {0}")]
    MissingCoefficients(u64),

    #[error("k-validity fails: k = {k} is not below {bound}")]
    Validity { k: u32, bound: String },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("main term vanishes at X = {0}; ratio undefined")]
    DegenerateModel(f64),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::OutOfTheorem(_)
            | Error::Divergent(_)
            | Error::Validity { .. }
            | Error::DegenerateModel(_)
            | Error::MissingCoefficients(_)
            | Error::Aliasing { .. }
            | Error::Io(_) => 2,
            Error::ResourceLimit { .. } | Error::Overflow(_) => 3,
            Error::Nonconvergence { .. } | Error::IllConditioned(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
