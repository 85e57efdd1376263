use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{column}`")]
    MissingColumn { column: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("empty input")]
    EmptyInput,

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("zero variance: shape moments are undefined")]
    ZeroVariance,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("help variable undefined: denominator {denominator} is not positive")]
    NotBetaRepresentable { denominator: f64 },

    #[error(
        "infeasible moment pair (rho = {rho}, ab = {ab_product}, discriminant = {discriminant})"
    )]
    InfeasibleMomentPair {
        rho: f64,
        ab_product: f64,
        discriminant: f64,
    },

    #[error("unsupported model variant: {0}")]
    UnsupportedVariant(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("internal assertion failed: {0}")]
    InternalAssertion(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line tool.
    ///
    /// 0 ok, 2 schema/input, 3 empty result, 4 fit domain, 5 internal assertion,
    /// 1 for everything else (I/O, configuration).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingColumn { .. }
            | Error::Parse { .. }
            | Error::EmptyInput
            | Error::Integrity(_) => 2,
            Error::EmptyResult(_) => 3,
            Error::DegenerateSample(_)
            | Error::ZeroVariance
            | Error::SingularDesign(_)
            | Error::Domain(_)
            | Error::NotBetaRepresentable { .. }
            | Error::InfeasibleMomentPair { .. }
            | Error::UnsupportedVariant(_)
            | Error::InsufficientData(_) => 4,
            Error::InternalAssertion(_) => 5,
            Error::InvalidArgument(_)
            | Error::Config(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => 1,
        }
    }
}
