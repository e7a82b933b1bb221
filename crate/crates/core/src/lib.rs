//! Deterministic discrete-event simulator for a gossip-based collaborative
//! multi-armed bandit protocol, with baselines, rumor-spreading processes,
//! bound evaluators and a coupling checker.

pub mod baselines;
pub mod bounds;
pub mod coupling;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod instance;
pub mod metrics;
pub mod par;
pub mod params;
pub mod protocol;
pub mod rumor;
pub mod sim;

pub use error::{Error, Result};
pub use instance::{generate_synthetic_instance, ProblemInstance};
pub use metrics::{Regime, RunTrace};
pub use params::{derive_params, InitMode, Preset, ProtocolParams};
pub use sim::{run_regime, RunOptions};
