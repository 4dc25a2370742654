//! Deterministic stand-in for the device: window stack, view trees, the
//! voice assistant's command table, timed mutations and fault injection.

mod fault;
mod scenario;
mod state;

pub use fault::{FaultAction, FaultPlan, FaultTarget, FaultTracker};
pub use scenario::{parse_scenario, CommandTable, Mutation, MutationAction, Scenario, ScenarioError};
pub use state::{window_hash, SimError, SimState, SimWindow};
