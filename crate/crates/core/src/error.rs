use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("incompatible series: {0}")]
    IncompatibleSeries(String),

    #[error("composition domain error: substitution for {0} has a term of degree zero")]
    CompositionDomain(String),

    #[error("reversion error: {0}")]
    Reversion(String),

    #[error("expansion of {0} needs an argument without constant term")]
    ExpansionDomain(String),

    #[error("{needed} variables needed but a monomial holds at most {max}")]
    TooManyVariables { needed: usize, max: usize },

    #[error("coordinate degree {degree} exceeds the cap {cap}")]
    CoordinateDegreeCap { degree: u32, cap: u32 },

    #[error("order {order} exceeds the configured cap {cap}")]
    OrderOverflow { order: u32, cap: u32 },

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension {got} is not supported by this model ({expected})")]
    Dimension { got: usize, expected: String },

    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),

    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
        expected: Vec<String>,
    },

    #[error("arity mismatch: {0}")]
    Arity(String),

    #[error("unbound index '{0}'")]
    UnboundIndex(String),

    #[error("division by a series without invertible constant term")]
    Division,

    #[error("operator is not invertible at this truncation: {0}")]
    NotInvertible(String),

    #[error("expression cannot be written in the generators A and D: {0}")]
    NotBorel(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
