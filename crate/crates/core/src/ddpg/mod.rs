//! Recurrent DDPG: sequence replay, target networks with soft updates,
//! noisy episode generation and the interleaved training loop.

pub mod replay;
pub mod rollout;
pub mod train;
pub mod update;

pub use replay::{Episode, ReplayBuffer, SequenceBatch, Transition};
pub use rollout::{generate_episode, EpisodeSource, GenerationSpec, Sequential};
pub use train::{MetricsRow, TrainConfig, TrainObserver, Trainer};
pub use update::{actor_update, compute_targets, critic_update, discounted_return, soft_update};
