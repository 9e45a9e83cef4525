//! Double deep Q-network agent built from scratch: network, replay buffer,
//! exploration, the double-estimator targets, and the training loop.

mod network;
mod policy;
mod replay;
mod scalar;
mod tabular;
mod train;

pub use network::{Dense, Gradients, QNetwork, Workspace};
pub use policy::{argmax, epsilon_greedy, random_action, random_policy, EpsilonSchedule};
pub use replay::{ReplayBuffer, Transition, TransitionRef};
pub use scalar::Scalar;
pub use tabular::QTable;
pub use train::{
    ddqn_targets, evaluate_greedy, evaluate_policy, eval_episode_seeds, train, train_with, EvalPoint, EvalRecord,
    TrainConfig, TrainOutcome, Trainer,
};

use crate::Result;
use alloc::vec::Vec;

/// Outcome of one environment step as seen by the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Episodic environment with a fixed-length observation and discrete actions.
pub trait Environment {
    fn observation_len(&self) -> usize;
    fn action_count(&self) -> usize;
    fn reset(&mut self, episode_seed: u64) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<Step>;
}
