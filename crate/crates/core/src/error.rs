use std::path::PathBuf;

/// Errors produced by the embedding engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite value in input at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },
    #[error("sigma search failed to bracket the target for point {point}")]
    SigmaSearchFailed { point: usize },
    #[error("vertex {vertex} has zero degree; drop or reconnect the point")]
    IsolatedVertex { vertex: usize },
    #[error("matrix is not symmetric: |L[{row},{col}] - L[{col},{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("eigensolver converged {converged} of {requested} eigenpairs")]
    ConvergenceFailure { converged: usize, requested: usize },
    #[error("trivial eigenvector not found among the near-zero eigenpairs")]
    TrivialModeNotFound,
    #[error("requested subspace of {requested} modes but only {available} are available")]
    SubspaceTooLarge { requested: usize, available: usize },
    #[error("dense loss evaluation is limited to n <= {limit}, got n = {n}")]
    TooLargeForDense { n: usize, limit: usize },
    #[error("curve fit diverged (last iterate a = {a}, b = {b})")]
    FitDiverged { a: f64, b: f64 },
    #[error("non-finite update at epoch {epoch}, edge {edge}")]
    NonFiniteUpdate { epoch: usize, edge: usize },
    #[error("degenerate stage schedule: {0}")]
    DegenerateSchedule(String),
    #[error("reference embedding has zero norm")]
    ZeroReference,
    #[error("neighborhood size k = {k} too large for n = {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("rank correlation undefined for constant input")]
    ConstantInput,
    #[error("degenerate distances: {0}")]
    DegenerateDistances(String),
    #[error("largest connected component covers only {coverage:.3} of the points")]
    GraphTooFragmented { coverage: f64 },
    #[error("grid aggregation requires thumbnails")]
    MissingThumbnails,
    #[error("could not place {blobs} blob centers after {attempts} attempts")]
    CenterPlacementFailed { blobs: usize, attempts: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unsupported artifact format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("malformed input file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by invalid user input or configuration rather
    /// than a failure during computation.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidInput(_)
            | Error::NonFiniteInput { .. }
            | Error::SubspaceTooLarge { .. }
            | Error::TooLargeForDense { .. }
            | Error::DegenerateSchedule(_)
            | Error::KTooLarge { .. }
            | Error::MissingThumbnails
            | Error::ShapeMismatch(_)
            | Error::UnsupportedVersion { .. }
            | Error::Format { .. } => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
