use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants map one-to-one onto the failure modes of the individual
/// modules; callers that only care about the CLI exit code can use
/// [`Error::is_unresolved`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("divisor is not certified positive within {k_max} refinements")]
    DivisorNotSeparated { k_max: u32 },

    #[error("cannot condition on a history prefix of measure zero: {prefix}")]
    ConditioningOnNull { prefix: String },

    #[error("environment `{env}` has no exact evaluation")]
    ExactUnavailable { env: String },

    #[error("normalization is singular at prefix {prefix}: one-step mass is zero")]
    NormalizationSingular { prefix: String },

    #[error("existential search for S(n={n}, i={i}, t={t}, k) exceeded bound {bound}")]
    SearchBudgetExceeded { n: u64, i: u64, t: u64, bound: u64 },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("argmax tie cannot be resolved within k_max = {k_max}: {detail}")]
    Unresolvable { k_max: u32, detail: String },

    #[error("value enclosures did not reach width {target} within k_max = {k_max}")]
    BudgetExhausted { k_max: u32, target: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid spec (line {line}): {message}")]
    InvalidSpec { line: usize, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// True for the errors that signal an undecided comparison rather than
    /// bad input (ties that cannot be separated, exhausted budgets).
    pub fn is_unresolved(&self) -> bool {
        matches!(
            self,
            Error::Unresolvable { .. }
                | Error::BudgetExhausted { .. }
                | Error::DivisorNotSeparated { .. }
        )
    }

    pub(crate) fn spec(line: usize, message: impl Into<String>) -> Self {
        Error::InvalidSpec {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
