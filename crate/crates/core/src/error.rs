use thiserror::Error;

#[derive(Debug, Error)]
pub enum CfError {
    #[error("generator index {index} out of range for an algebra with {n_gen} generators")]
    GeneratorOutOfRange { index: usize, n_gen: usize },

    #[error("algebra has {0} generators, at most 63 are supported")]
    TooManyGenerators(usize),

    #[error("algebra size mismatch: {0} vs {1} generators")]
    SizeMismatch(usize, usize),

    #[error("element is not invertible (numeric part magnitude {0:e})")]
    NotInvertible(f64),

    #[error("parity violation at ({row}, {col})")]
    ParityViolation { row: usize, col: usize },

    #[error("expected an even element")]
    NotEven,

    #[error("singular numeric block")]
    SingularBlock,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("unsupported group dimension: {0}")]
    UnsupportedDimension(String),

    #[error("N = {n} is outside the stable range (requires N >= {min})")]
    OutsideStableRange { n: usize, min: usize },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("pole in {0}")]
    Pole(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CfError>;
