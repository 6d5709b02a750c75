//! Classical simulator and rate toolkit for entanglement distillation of
//! Bell-diagonal states in arbitrary finite dimension.
//!
//! The symbolic layer (`zmod`, `protocols`, `states`, `improve`) treats
//! breeding and hashing as index-vector processes over Z_d and evaluates
//! closed-form rates; the `oracle` module independently re-derives every
//! symbolic rule from dense matrix quantum mechanics.

pub mod cli;
pub mod error;
pub mod improve;
pub mod oracle;
pub mod protocols;
pub mod states;
pub mod zmod;

pub use error::{Error, Result};
pub use improve::{
    best_strategy_rate, qubit_level_rate, recurrence_step, recurrence_then_hash_rate,
    subspace_projection, subspace_rate, Partition, RecurrenceResult, Strategy,
};
pub use protocols::{
    breeding_outcome, hashing_outcome, hashing_update, simulate_identification, CopyModel,
    MeasurementPlan, ProtocolMode, SimulateOptions, SimulationReport,
};
pub use states::{
    er_isotropic, hashing_rate, hashing_rate_isotropic, isotropic_entropy, BellDiagonalState,
    IsotropicState,
};
pub use zmod::{collision_probability, dot_mod, IndexVector, Rational};
