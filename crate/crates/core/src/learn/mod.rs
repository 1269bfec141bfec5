//! Branch-dueling Q-learning.
//!
//! A shared ReLU trunk feeds a scalar state value and one advantage vector
//! per action dimension; each branch's Q-values are
//! `V(s) + A_d(s, a) - mean_a' A_d(s, a')`.

mod agent;
mod network;

pub use agent::{epsilon_at, train_episodes, Agent, AgentConfig, Environment, ReplayBuffer, Transition};
pub use network::{BdqNetwork, Dense, Gradients};
