use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Basis vectors are (numerically) parallel.
    #[error("invalid lattice: cell area {area} is not positive")]
    InvalidLattice {
        /// Absolute wedge product of the basis.
        area: f64,
    },
    /// A translation is not an integer combination of the basis.
    #[error("vector ({x}, {y}) is not on the lattice")]
    OffLattice {
        /// First Cartesian component.
        x: f64,
        /// Second Cartesian component.
        y: f64,
    },
    /// A shift does not map the grid onto itself.
    #[error("shift ({x}, {y}) is not commensurate with the grid")]
    GridMismatch {
        /// First Cartesian component.
        x: f64,
        /// Second Cartesian component.
        y: f64,
    },
    /// Chern number evaluation did not give an integer.
    #[error("cocycle inconsistency: Chern value {value} is not an integer")]
    CocycleInconsistency {
        /// Raw value of the winding expression.
        value: f64,
    },
    /// Matrix is not square, not Hermitian or has the wrong size.
    #[error("shape error: {0}")]
    Shape(String),
    /// A scalar function returned a non-finite value on the spectrum.
    #[error("function not finite at eigenvalue {eigenvalue}")]
    Evaluation {
        /// The offending eigenvalue.
        eigenvalue: f64,
    },
    /// State violates `0 <= Gamma <= 1` or another admissibility bound.
    #[error("admissibility violated: {0}")]
    Admissibility(String),
    /// Bad parameter value (temperature, rank, grid size, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Root finding failed to bracket a solution.
    #[error("no root found: {0}")]
    NoRoot(String),
    /// Eigensolver or other numerical routine failed.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A hypothesis of a check (such as `v <= 0`) does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

/// Result alias for the crate.
pub type Result<T> = core::result::Result<T, Error>;
