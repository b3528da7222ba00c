use std::fmt;

use thiserror::Error;

/// A single violated parameter-space constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    Sigma2NotPositive,
    RhoNegative,
    RhoNotBelowOne,
    DeltaNegative,
    ArmaOutOfRange,
    NonFinite,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Violation::Sigma2NotPositive => "sigma2 must be > 0",
            Violation::RhoNegative => "rho_L must be >= 0",
            Violation::RhoNotBelowOne => "rho_L must be < 1",
            Violation::DeltaNegative => "delta must be >= 0",
            Violation::ArmaOutOfRange => "ARMA(1,1) requires |tau| < 1 and |rho_A| <= 1",
            Violation::NonFinite => "parameters must be finite",
        };
        f.write_str(msg)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum LearError {
    #[error("invalid measurement grid: {0}")]
    InvalidGrid(String),
    #[error("degenerate grid: no subject has two or more measurements")]
    DegenerateGrid,
    #[error("invalid parameters: {}", join_violations(.0))]
    InvalidParams(Vec<Violation>),
    #[error("invalid matrix size: {0}")]
    InvalidSize(String),
    #[error("subject index {index} out of range ({count} subjects)")]
    SubjectOutOfRange { index: usize, count: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("grid is not an equally spaced special case: {0}")]
    NotSpecialCase(String),
    #[error("distance range d_max - d_min is zero; delta is not identifiable")]
    DegenerateRange,
    #[error("parameters are unidentifiable: {0}")]
    Unidentifiable(String),
    #[error("ARMA(1,1) parameters have no LEAR preimage: {0}")]
    OutsideLearImage(String),
    #[error("stacked fixed-effect design is rank deficient")]
    RankDeficient,
    #[error("residual variance estimate is zero; likelihood is unbounded")]
    SingularFit,
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("duplicate measurement for subject {subject:?} at time {time} (line {line})")]
    DuplicateMeasurement {
        line: u64,
        subject: String,
        time: f64,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl LearError {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            LearError::InvalidGrid(_) => "invalid_grid",
            LearError::DegenerateGrid => "degenerate_grid",
            LearError::InvalidParams(_) => "invalid_params",
            LearError::InvalidSize(_) => "invalid_size",
            LearError::SubjectOutOfRange { .. } => "subject_out_of_range",
            LearError::NotPositiveDefinite => "not_positive_definite",
            LearError::NotSpecialCase(_) => "not_special_case",
            LearError::DegenerateRange => "degenerate_range",
            LearError::Unidentifiable(_) => "unidentifiable",
            LearError::OutsideLearImage(_) => "outside_lear_image",
            LearError::RankDeficient => "rank_deficient",
            LearError::SingularFit => "singular_fit",
            LearError::FitFailed(_) => "fit_failed",
            LearError::InvalidData(_) => "invalid_data",
            LearError::DuplicateMeasurement { .. } => "duplicate_measurement",
            LearError::Parse { .. } => "parse_error",
            LearError::Config(_) => "config_error",
            LearError::Io(_) => "io_error",
        }
    }

    /// Process exit code for the CLI; one code per error class.
    ///
    /// | code | class |
    /// |------|-------|
    /// | 3 | invalid input (grid, parameters, sizes, data) |
    /// | 4 | I/O |
    /// | 5 | parse / configuration |
    /// | 6 | numerical failure |
    /// | 7 | reparameterization domain |
    pub fn exit_code(&self) -> i32 {
        match self {
            LearError::InvalidGrid(_)
            | LearError::DegenerateGrid
            | LearError::InvalidParams(_)
            | LearError::InvalidSize(_)
            | LearError::SubjectOutOfRange { .. }
            | LearError::InvalidData(_)
            | LearError::DegenerateRange => 3,
            LearError::Io(_) => 4,
            LearError::DuplicateMeasurement { .. } | LearError::Parse { .. } | LearError::Config(_) => 5,
            LearError::NotPositiveDefinite
            | LearError::RankDeficient
            | LearError::SingularFit
            | LearError::FitFailed(_) => 6,
            LearError::NotSpecialCase(_)
            | LearError::Unidentifiable(_)
            | LearError::OutsideLearImage(_) => 7,
        }
    }
}

pub type Result<T, E = LearError> = std::result::Result<T, E>;
