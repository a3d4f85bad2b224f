use thiserror::Error;

#[derive(Debug, Error)]
pub enum CouncilError {
    #[error("price table not found: {0}")]
    MissingFile(String),

    #[error("unparseable cell: {0}")]
    BadCell(String),

    #[error("gap exceeds fill limit: column {column} unfillable at {date}")]
    GapExceedsFillLimit { column: String, date: String },

    #[error("malformed table: {0}")]
    MalformedTable(String),

    #[error("period index {t} out of range (0..{len})")]
    PeriodOutOfRange { t: usize, len: usize },

    #[error("no sentiment observations")]
    EmptySentiment,

    #[error("cold ledger: coalition has no return history")]
    ColdLedger,

    #[error("agent count {n} exceeds permutation enumeration guard (max {max})")]
    EnumerationGuard { n: usize, max: usize },

    #[error("expected a 3-player game, got N={0}")]
    WrongPlayerCount(usize),

    #[error("constraint set infeasible for K*w_max + c_max < 1 (K={k}, w_max={w_max}, c_max={c_max})")]
    InfeasibleConstraints { k: usize, w_max: f64, c_max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown agent id: {0}")]
    UnknownAgent(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("empty date range: {0}")]
    EmptyRange(String),

    #[error("trace error: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CouncilError>;
