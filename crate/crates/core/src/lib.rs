//! Monte Carlo simulation of tax compliance on a periodic square lattice.
//!
//! Every lattice site hosts a taxpayer whose behavior is an Ising spin
//! (`+1` compliant, `-1` evading). Spins evolve by heat-bath updates under a
//! nearest-neighbor coupling, a per-agent local field (moral attitude) and a
//! per-agent temperature. Random audits force detected evaders into
//! compliance for a fixed penalty period, and selfish agents adapt their
//! field in response to changes in the compliant fraction (the public-goods
//! signal).
//!
//! Runs are fully determined by their [`SimulationConfig`] and seed.

pub mod config;
pub mod dynamics;
pub mod enforcement;
pub mod error;
pub mod feedback;
pub mod lattice;
pub mod output;
pub mod population;
pub mod scenarios;
pub mod simulation;

pub use error::{Error, Result};
pub use lattice::{Dims, Spin, SpinGrid};
pub use population::{Agent, AgentType, Composition, InitPolicy, Society};
pub use simulation::{FieldHistogram, RunOutput, Simulation, SimulationConfig, StepRecord};

/// Random stream used throughout the crate.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Creates the simulation random stream from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
