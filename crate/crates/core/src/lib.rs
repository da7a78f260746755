//! State-vector simulation of probabilistic two-qubit teleportation through a
//! partially entangled four-qubit channel.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod barenco;
pub mod error;
pub mod gates;
pub mod matrix;
pub mod protocol;
pub mod scalar;
pub mod state;

pub use error::{Error, Result};
pub use gates::{BasicGate, ChannelParams, Factor, GateLabel, GateOp, GateSequence, U0_FACTORS};
pub use matrix::Matrix;
pub use protocol::{
    BellOutcome, ChannelMode, Correction, CorrectionTable, DeferredMode, InputState, OutcomeIndex,
    Pauli, TrialRecord, CORRECTION_TABLE,
};
pub use scalar::{Amplitude, Real};
pub use state::{Measurement, PureState, UnnormalizedBranch};

pub type State = PureState<f64>;
pub type Branch = UnnormalizedBranch<f64>;
pub type Unitary = Matrix<f64>;
pub type Channel = ChannelParams<f64>;
pub type Input = InputState<f64>;
pub type Op = GateOp<f64>;
pub type Sequence = GateSequence<f64>;
pub type Primitive = barenco::PrimitiveGate<f64>;
pub type Trial = TrialRecord<f64>;
