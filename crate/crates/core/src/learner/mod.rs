//! MADDPG training: deterministic actors, centralized critics, replay,
//! target networks, and the agent-shuffling augmentation baseline.

mod actor;
mod buffer;
mod config;
mod train;
mod update;

pub use actor::{select_action, Actor};
pub use buffer::{Batch, ReplayBuffer, Transition};
pub use config::{TrainConfig, CONFIG_KEYS};
pub use train::{build_agents, checkpoint_schedule, train, Trainer};
pub use update::{
    actor_gradient, actor_objective, actor_update, batch_graphs, critic_loss, critic_update, permute_transition,
    shuffle_augment, soft_update, target_actions, td_targets, Agent, UpdateContext,
};
