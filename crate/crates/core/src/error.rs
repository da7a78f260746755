use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expected {expected} amplitudes for the register, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("amplitude or matrix entry is not finite")]
    NonFinite,

    #[error("register needs at least one qubit (got {0})")]
    EmptyRegister(usize),

    #[error("register of {0} qubits is too large for a dense simulation")]
    RegisterTooLarge(usize),

    #[error("qubit {qubit} is outside a register of {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("qubit {0} appears more than once in a target list")]
    DuplicateQubit(usize),

    #[error("gate of dimension {dim} cannot act on {targets} target qubit(s)")]
    GateDimension { dim: usize, targets: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not square: {rows} rows, {entries} entries")]
    NotSquare { rows: usize, entries: usize },

    #[error("matrix is not unitary (max |U^dagger U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("outcome bits {bits:?} do not match {qubits} measured qubit(s)")]
    OutcomeArity { bits: Vec<u8>, qubits: usize },

    #[error("measurement outcome bit must be 0 or 1, got {0}")]
    InvalidBit(u8),

    #[error("qubits outside the kept set are not in a definite basis state")]
    NotProduct,

    #[error("unknown gate name {0:?}")]
    UnknownGate(String),

    #[error("controls and target must be a permutation of the three register qubits: controls {controls:?}, target {target}")]
    InvalidControlAssignment {
        controls: (usize, usize),
        target: usize,
    },

    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),

    #[error("input state is not normalized (norm^2 = {norm_sqr})")]
    InputNotNormalized { norm_sqr: f64 },

    #[error("Bell outcome index {0} out of range 0..4")]
    BellOutcomeRange(u8),

    #[error("outcome index {0} out of range 0..16")]
    OutcomeRange(u8),

    #[error("gate factor {0:?} has no primitive expansion")]
    UnrecognizedFactor(String),

    #[error("qubits {0} and {1} must differ")]
    SameQubit(usize, usize),
}
