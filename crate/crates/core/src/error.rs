use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("group mismatch: expected an element of {expected}, got {found}")]
    GroupMismatch { expected: String, found: String },

    #[error("unknown group id `{0}`")]
    UnknownGroup(String),

    #[error("cannot parse element `{text}` in {group}: {reason}")]
    ParseElement {
        group: String,
        text: String,
        reason: String,
    },

    #[error("generating set is not symmetric: inverse of `{0}` is missing")]
    AsymmetricGenerators(String),

    #[error("word length radius exceeded: |g| > {lower_bound_minus_one}, so |g| >= {lower_bound}")]
    RadiusExceeded {
        lower_bound: u32,
        lower_bound_minus_one: u32,
    },

    #[error("element budget exceeded: {count} elements (limit {limit})")]
    BudgetExceeded { count: usize, limit: usize },

    #[error("truncation is not available on the exact backend (eps = {0})")]
    TruncationOnExact(f64),

    #[error("measure has negative weight at an element; operation needs a nonnegative measure")]
    NegativeWeight,

    #[error("invalid norm exponent p = {0}; p must be >= 1 or `card`")]
    InvalidExponent(f64),

    #[error("exponent q = {0} is not available on the exact backend (integers only)")]
    NonIntegerExact(f64),

    #[error("not a probability measure (total mass {0})")]
    NotProbability(f64),

    #[error(
        "measure is periodic: mu(e) = 0 on a bipartite Cayley graph; use the lazy modification 1/2(delta_e + mu) or even times"
    )]
    Periodic,

    #[error("vanishing denominator in {0}")]
    VanishingDenominator(&'static str),

    #[error("zero cocycle: the statistic is 0/0")]
    ZeroCocycle,

    #[error("cocycle is not harmonic: |sum mu(g) b(g)| = {0:e}")]
    NotHarmonic(f64),

    #[error("harmonic projection obstructed: mean drift has component {0:e} along invariant vectors")]
    Obstructed(f64),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("invalid cocycle: {0}")]
    InvalidCocycle(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty sample")]
    EmptySample,

    #[error("finite group: alpha(n) = 0, thin scores are undefined")]
    FiniteGroup,

    #[error("cache: {0}")]
    Cache(String),

    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn radius(lower_bound: u32) -> Self {
        Error::RadiusExceeded {
            lower_bound,
            lower_bound_minus_one: lower_bound.saturating_sub(1),
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded { .. } | Error::RadiusExceeded { .. } => 3,
            Error::Io(_) | Error::Cache(_) => 1,
            _ => 2,
        }
    }
}
