//! Influence-maximisation bandits on graphs where the influenced set is
//! revealed after each round.
//!
//! The crate is split along the life of an experiment:
//!
//! * [`graph`] builds and loads influence matrices.
//! * [`environment`] samples influenced sets and records regret traces.
//! * [`policy`] holds the decision rules (GraphMOSS, BARE and baselines)
//!   behind the [`policy::Policy`] trait and a name-keyed registry.
//! * [`analysis`] computes exact detectable horizon / dimension quantities
//!   and aggregates traces.
//! * [`harness`] wires everything into configurable, seeded, parallel
//!   experiments with CSV output.

pub mod analysis;
pub mod environment;
pub mod error;
pub mod graph;
pub mod harness;
pub mod policy;
pub mod seed;

pub use error::{Error, Result};
