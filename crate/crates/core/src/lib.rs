//! Brickwork random-circuit OTOC simulation.
//!
//! The library samples random 2D brickwork circuits, evaluates moments of the
//! correlation operator C = U^dag B U M on |0..0> and on the maximally mixed
//! state, emulates the shot-based quantum estimator, analyzes light-cone
//! structure, and runs reproducible ensemble experiments.

pub mod ensemble;
pub mod error;
pub mod harness;
pub mod lightcone;
pub mod otoc;
pub mod pauli;
pub mod rng;
pub mod statevector;

pub use ensemble::{
    brickwork_layout, sample_circuit, sample_circuit_with_seed, Circuit, EnsembleSpec,
    GateDistribution, GridGeometry, TwoQubitGate,
};
pub use error::{Error, Result};
pub use otoc::{
    mixed_state_moment, otoc_moment, otoc_moment_direct, shot_estimate, shots_for_epsilon,
    time_ordered_correlator, CorrelatorSpec, MixedMoment, ShotEstimate, TraceMethod,
};
pub use pauli::{PauliLetter, PauliString};
pub use statevector::{Direction, StateVector};
