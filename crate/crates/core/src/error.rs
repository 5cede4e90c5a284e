use thiserror::Error;

/// Failure modes of the forward and inverse spectral pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SlError {
    #[error("invalid boundary problem: {0}")]
    InvalidProblem(String),
    #[error("integrator produced a non-finite state at lambda = {re}{im:+}i")]
    NonFiniteState { re: f64, im: f64 },
    #[error("lambda = {re}{im:+}i is too close to an eigenvalue (|characteristic| = {modulus:e})")]
    NearEigenvalue { re: f64, im: f64, modulus: f64 },
    #[error("root census mismatch: winding number {winding} but {located} roots located inside radius {radius}")]
    RootCountMismatch {
        winding: i64,
        located: usize,
        radius: f64,
    },
    #[error("Newton refinement failed: {0}")]
    NewtonDivergence(String),
    #[error("degenerate generalized weight at index {index} (|alpha| = {modulus:e})")]
    DegenerateWeight { index: usize, modulus: f64 },
    #[error("degenerate leading Weyl coefficient in block starting at index {index}")]
    DegenerateCoefficient { index: usize },
    #[error("no isolating circle around eigenvalue index {index}")]
    IsolationFailure { index: usize },
    #[error("Weyl coefficient routes disagree at index {index}: weights give {from_weights}, residues give {from_residues} (rel. error {error:e})")]
    CrossValidationFailure {
        index: usize,
        from_weights: String,
        from_residues: String,
        error: f64,
    },
    #[error("inconsistent block structure: {0}")]
    BlockStructureError(String),
    #[error("pole with index {index} lies on the contour (| |lambda| - r | = {distance:e})")]
    PoleOnContour { index: usize, distance: f64 },
    #[error("target eigenvalues {first} and {second} coincide")]
    DuplicateTargetEigenvalue { first: usize, second: usize },
    #[error("leading coefficient of block {index} vanishes; cannot split")]
    ZeroLeadingCoefficient { index: usize },
    #[error("discarded tail estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    TruncationBudgetExceeded { estimate: f64, tolerance: f64 },
    #[error("main equation operator is singular at grid index {grid_index} (pivot {pivot:e})")]
    SingularOperator { grid_index: usize, pivot: f64 },
    #[error("main equation residual {residual:e} too large at grid index {grid_index}")]
    ResidualTooLarge { grid_index: usize, residual: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
    #[error("malformed spectral data file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, SlError>;
