use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown qubit label `{0}`")]
    UnknownQubit(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("label sets differ: {0:?} vs {1:?}")]
    LabelMismatch(Vec<String>, Vec<String>),

    #[error("partial trace requires a nonempty set of kept qubits")]
    EmptyKeepSet,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance is not one of the compiled N=15 cases (C=11 or C=2): C={0}")]
    NotCompiled(u64),

    #[error("window of {span} nm is smaller than one SAW wavelength ({wavelength} nm)")]
    WindowTooSmall { span: f64, wavelength: f64 },

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("singular tridiagonal system at row {row}")]
    SingularSystem { row: usize },

    #[error(
        "packet not fully transmitted: norm {transmitted} in the barrier wire is below {threshold}"
    )]
    NotTransmitted { transmitted: f64, threshold: f64 },

    #[error("phase is ill-defined: normalized overlap {0} is below 0.5")]
    IllDefinedPhase(f64),

    #[error("rank cap {cap} exceeded: keeping {cap} terms discards weight {discarded:e} (tolerance {tolerance:e})")]
    RankCapExceeded {
        cap: usize,
        discarded: f64,
        tolerance: f64,
    },

    #[error("no sweep point satisfies the transmission and tolerance constraints")]
    NoFeasiblePoint {
        table: Vec<crate::calibrate::SweepRow>,
    },

    #[error("configuration is missing a device layout, which physical mode requires")]
    MissingLayout,

    #[error("network gate {index} ({kind}) cannot be mapped onto the device")]
    UnsupportedGate { index: usize, kind: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
