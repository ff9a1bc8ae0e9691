use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ingest error at row {row}, column {col}: {msg}")]
    Ingest { row: usize, col: String, msg: String },

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("column `{0}` is constant")]
    DegenerateColumn(String),

    #[error("design is rank deficient at column {0}")]
    RankDeficient(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("observation {0} has leverage one")]
    LeverageOne(usize),

    #[error("conformal grid accepted no candidate value")]
    ConformalEmpty,

    #[error("no convergence after {iterations} iterations: {msg}")]
    Convergence { iterations: usize, msg: String },

    #[error("separation or monotone likelihood: {0}")]
    Separation(String),

    #[error("kernel bandwidth too small: {0}")]
    Bandwidth(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::Ingest { .. }
                | Error::Spec(_)
                | Error::Io(_)
                | Error::DegenerateColumn(_)
                | Error::InsufficientData(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Ingest { .. } => "ingest",
            Error::Spec(_) => "spec",
            Error::DegenerateColumn(_) => "degenerate_column",
            Error::RankDeficient(_) => "rank_deficient",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Singular(_) => "singular",
            Error::Degenerate(_) => "degenerate",
            Error::LeverageOne(_) => "leverage_one",
            Error::ConformalEmpty => "conformal_empty",
            Error::Convergence { .. } => "convergence",
            Error::Separation(_) => "separation",
            Error::Bandwidth(_) => "bandwidth",
            Error::Solver(_) => "solver",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
