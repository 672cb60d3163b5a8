use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite system frequency {0}")]
    NonFiniteOmega(f64),

    #[error("non-finite drive frequency {0}")]
    NonFiniteDrive(f64),

    #[error("non-positive mode frequency {value} at mode {index}")]
    NonPositiveFrequency { index: usize, value: f64 },

    #[error("non-finite coupling {value} at mode {index}")]
    NonFiniteCoupling { index: usize, value: f64 },

    #[error("label length mismatch: expected {expected} modes, got {got}")]
    LabelLength { expected: usize, got: usize },

    #[error("non-finite coherent label at mode {0}")]
    NonFiniteLabel(usize),

    #[error("mode index {index} out of range for a bath of {modes} modes")]
    ModeIndex { index: usize, modes: usize },

    #[error("time arguments are not ordered from 0 toward t = {t}")]
    UnorderedTimes { t: f64 },

    #[error("invalid system sector {0}; expected +1 or -1")]
    InvalidSector(i32),

    #[error("drive frequency is required for the driven model")]
    MissingDrive,

    #[error("bath kind mismatch: {0}")]
    BathKind(&'static str),

    #[error("invalid truncation: {0}")]
    Truncation(String),

    #[error("dimension {dim} exceeds the limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("Hermitian eigendecomposition did not converge")]
    Eigendecomposition,

    #[error("matrix is not unitary (residual {0:e})")]
    NonUnitary(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid density matrix: {0}")]
    Density(String),

    #[error("symplectic condition violated (residual {0:e})")]
    NotSymplectic(f64),
}
