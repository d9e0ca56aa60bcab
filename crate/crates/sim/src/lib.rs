//! Round-based simulation of the trust-gossip protocol.
//!
//! A trial builds a topology, gives every node an identity and an empty trust
//! store, then for each round samples interactions (edges, with replacement)
//! and runs the pairwise protocol on each. Randomness is split into named
//! streams per trial so that variants can be compared on identical graphs,
//! schedules and attestation coins.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod scenario;
pub mod streams;
pub mod trial;

pub use config::{ProtocolAssignment, SimConfig, TopologySpec};
pub use error::{SimError, SimResult};
pub use experiment::{run_experiment, run_experiment_serial, AggregateRow, ExperimentResult};
pub use output::{emit_csv, format_g, CSV_HEADER};
pub use trial::{run_trial, sample_interactions, RoundDetail, RoundMetrics, TrialOutput};
