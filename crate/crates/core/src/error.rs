use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is disconnected: found {count} connected components")]
    Disconnected { count: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid graph spec `{0}` (expected ring:N, grid:RxC, path:N, complete:N or file:PATH)")]
    GraphSpec(String),

    #[error("invalid sampler spec `{0}` (expected tau:K, pairwise or all)")]
    SamplerSpec(String),

    #[error("block size {tau} is outside 1..={edges}")]
    BlockSize { tau: usize, edges: usize },

    #[error("edge selection is empty; a gossip step needs at least one edge")]
    EmptySelection,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("matrix has no nonzero eigenvalue")]
    ZeroMatrix,

    #[error("{count} subsets exceed the enumeration cap of {cap}; use Monte Carlo estimation")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("expected exactly one zero eigenvalue of AᵀHA, found {0}: H is singular on the relevant subspace")]
    SingularRate(usize),

    #[error("rate cross-check failed: {from_gap} from the spectral gap vs {from_expected_w} from E[W]")]
    RateMismatch { from_gap: f64, from_expected_w: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("a run reached the iteration cap of {0} before converging")]
    IterationCap(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
