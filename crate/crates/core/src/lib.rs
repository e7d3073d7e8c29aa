//! Simulation of deterministic GHZ-state transfer between two cavities
//! through a coupler qubit.
//!
//! The crate builds the joint Hilbert space (qutrits in each cavity, the
//! coupler, two truncated modes), every Hamiltonian of the five-step
//! protocol, the pulse schedule with its timing budget, and the closed-form
//! states used as oracles. Units: hbar = 1, angular frequencies in rad/s,
//! times in seconds.

pub mod analysis;
pub mod density;
pub mod dsl;
pub mod error;
pub mod evolution;
pub mod hamiltonian;
pub mod layout;
pub mod operator;
pub mod params;
pub mod runner;
pub mod schedule;
pub mod sparse;
pub mod state;

pub use analysis::{make_oracle_state, AmplitudeSource, Checkpoint, Encoding, GhzSpec};
pub use density::DensityMatrix;
pub use dsl::{parse_schedule, serialize_schedule, validate_schedule, Diagnostic, DiagnosticCode, ScheduleDocument};
pub use error::{Error, Result};
pub use evolution::{checkpoint_fidelity, evolve_lindblad, evolve_unitary, EvolutionMode, EvolutionSpec, Generator};
pub use layout::{build_layout, Cavity, Level, Site, SystemLayout};
pub use operator::{embed_qudit_op, mode_annihilation, mode_creation, OperatorMatrix};
pub use params::{EffectiveRates, PhysicalParams};
pub use runner::{run_protocol, RunMode, RunOptions, RunOutcome, RunState};
pub use schedule::{build_schedule, solve_resonance, timing_budget, PulseSegment, ResonanceSolution, Schedule};
pub use state::QuantumState;
