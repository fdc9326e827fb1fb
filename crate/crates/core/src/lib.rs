//! Desk-scale simulation of mixed-state quantum circuits and channels, the
//! compilation of QMA verifiers into circuit-testing instances, and the
//! swap-test protocol for detecting insecure encryption.

pub mod applications;
pub mod cap;
pub mod channel;
pub mod circuit;
pub mod error;
pub mod linalg;
pub mod protocol;
pub mod reduction;
pub mod state;
pub mod verifier;

pub use channel::{KeyedChannelFamily, QuantumChannel};
pub use circuit::{GateKind, GateOp, MixedStateCircuit};
pub use error::{QctError, Result};
pub use state::{DensityOperator, HermitianObservable, PureState, RegisterLayout};
