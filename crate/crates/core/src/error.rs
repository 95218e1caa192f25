use alloc::string::String;

use crate::sim::GateKind;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("qubit {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("{kind} is a rotation and needs an angle")]
    MissingAngle { kind: GateKind },
    #[error("{kind} does not take an angle")]
    SuperfluousAngle { kind: GateKind },
    #[error("{kind} expects {expected} qubit(s)")]
    Arity { kind: GateKind, expected: usize },
    #[error("{kind} acts twice on qubit {qubit}")]
    RepeatedQubit { kind: GateKind, qubit: usize },
    #[error("parameter slot {slot} missing (got {len} parameters)")]
    MissingParam { slot: usize, len: usize },
    #[error("feature index {index} missing (got {len} features)")]
    MissingFeature { index: usize, len: usize },
    #[error("feature {index} = {value} lies outside [-1, 1]")]
    FeatureOutOfRange { index: usize, value: f64 },
    #[error("qubit count mismatch: expected {expected}, found {found}")]
    QubitMismatch { expected: usize, found: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("measurement qubit set is empty")]
    EmptyQubitSet,
    #[error("circuit still has trainable or embedding slots")]
    UnresolvedSlots,
    #[error("{n_qubits} qubits exceeds the density-matrix limit of {max}")]
    TooManyQubits { n_qubits: usize, max: usize },
    #[error("invalid device: {0}")]
    InvalidDevice(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid label {value} at row {index}")]
    InvalidLabel { index: usize, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
