//! Stochastic surveillance on graphs with heterogeneous attack durations.
//!
//! A patrolling agent moves on a graph following a Markov chain; an
//! omniscient attacker observes the agent's position and attacks the node
//! where capture is least likely within that node's attack duration. This
//! crate evaluates the resulting capture probability exactly, synthesizes
//! equalizing patrol strategies on complete, complete bipartite and star
//! graphs, and allocates integer defense budgets (attack durations) across
//! nodes. Independent oracles (exhaustive enumeration, random-restart local
//! search, Monte Carlo) live in [`oracles`].

pub mod allocation;
pub mod error;
pub mod graph;
pub mod markov;
pub mod oracles;
pub mod rootfind;
pub mod strategy;

pub use error::{Error, Result};
pub use graph::{
    build_graph, validate_attack_durations, AttackDurations, FeasibilityReport, GraphFamily,
    GraphSpec, GraphTopology,
};
pub use markov::{
    capture_probability, hitting_time_probabilities, simulate_capture, stationary_distribution,
    CaptureReport, HittingTimeTensor, SimulationReport, StationaryDistribution, TransitionMatrix,
};
