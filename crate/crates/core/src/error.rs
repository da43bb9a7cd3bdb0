use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("trace {0} differs from one")]
    TraceNotOne(f64),
    #[error("state vector norm {0} differs from one")]
    NotNormalized(f64),
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid pipeline: {0}")]
    InvalidPipeline(String),
    #[error("noise strength {0} outside [0, 1]")]
    NoiseOutOfRange(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("projectors do not resolve the identity (max deviation {0:e})")]
    IncompleteMeasurement(f64),
    #[error("SDP solver did not converge after {iterations} iterations (relative gap {gap:e})")]
    SolverNonConvergence { iterations: usize, gap: f64 },
}
