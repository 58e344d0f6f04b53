use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitIndex { index: usize, num_qubits: usize },

    #[error("matrix is not Hermitian (max |H - H^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("matrix is not unitary (max |U^dagger U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transfer matrix is not trace preserving")]
    NotTracePreserving,

    #[error("transfer matrix is not unital")]
    NotUnital,

    #[error("channel is not completely positive (min Choi eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("lambda = 0 has no finite-rate generator")]
    NoFiniteGenerator,

    #[error("invalid decoherence generator: {0}")]
    InvalidGenerator(String),

    #[error("double-commutator form degenerates: {0}")]
    DegenerateDoubleCommutator(String),

    #[error("reservoir state is mixed (purity {purity}); a pure reservoir state is required")]
    MixedReservoir { purity: f64 },

    #[error("register of {num_qubits} qubits exceeds the cap of {cap}")]
    RegisterTooLarge { num_qubits: usize, cap: usize },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
}

impl Error {
    /// Stable machine-readable code, used by the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension_mismatch",
            Error::QubitIndex { .. } => "qubit_index_out_of_range",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::NotPositive { .. } => "not_positive",
            Error::NotUnitary { .. } => "non_unitary",
            Error::InvalidDensity(_) => "invalid_density_matrix",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NotTracePreserving => "not_trace_preserving",
            Error::NotUnital => "not_unital",
            Error::NotCompletelyPositive { .. } => "not_completely_positive",
            Error::NoFiniteGenerator => "no_finite_generator",
            Error::InvalidGenerator(_) => "invalid_generator",
            Error::DegenerateDoubleCommutator(_) => "degenerate_double_commutator",
            Error::MixedReservoir { .. } => "mixed_reservoir",
            Error::RegisterTooLarge { .. } => "register_too_large",
            Error::InvalidTimeGrid(_) => "invalid_time_grid",
        }
    }
}
