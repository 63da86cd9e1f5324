use thiserror::Error;

/// Errors produced by the sparsification library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },

    #[error("line {line}: probability {value} outside {range}")]
    ProbabilityRange {
        line: usize,
        value: f64,
        range: &'static str,
    },

    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("undefined relative discrepancy: original cut size is zero")]
    UndefinedRelativeDiscrepancy,

    #[error("k = {k} out of range for graph with {n} vertices")]
    KOutOfRange { k: usize, n: usize },

    #[error("exact enumeration refused: {edges} edges exceeds cap of {cap}")]
    TooManyEdges { edges: usize, cap: usize },

    #[error("target density {density} yields {edges} edges, fewer than the {required} needed for connectivity")]
    DensityBelowConnectivity {
        density: f64,
        edges: usize,
        required: usize,
    },

    #[error("alpha = {alpha} keeps {kept} edges but a spanning forest needs {required}; alpha must be at least (|V|-1)/|E| = {floor:.6}")]
    AlphaBelowConnectivityFloor {
        alpha: f64,
        kept: usize,
        required: usize,
        floor: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid backbone: {0}")]
    InvalidBackbone(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("instance too large: {edges} backbone edges exceeds cap of {cap}")]
    SizeCap { edges: usize, cap: usize },

    #[error("simplex did not converge within {0} pivots")]
    IterationCap(usize),

    #[error("calibration failed to bracket the target size within {0} steps")]
    CalibrationFailed(usize),

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("original graph has zero entropy")]
    ZeroEntropy,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
