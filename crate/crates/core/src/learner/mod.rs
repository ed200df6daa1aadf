//! Actor-critic learner: MLP, GAE, PPO updates, evaluation.

mod agent;
mod eval;
mod gae;
mod gradcheck;
mod mlp;
mod ppo;

use thiserror::Error;

use crate::gridworld::EnvError;

pub use agent::{PpoAgent, RoundReport, TaskLearner};
pub use eval::{
    evaluate_policy, evaluate_with, eval_seed, sample_action, train_seed, EvalSnapshot, ParamsPolicy, Policy,
    DEFAULT_EVAL_EPISODES,
};
pub use gae::{compute_gae, standardize, Advantages, RolloutBuffer, Transition};
pub use gradcheck::{gradient_check, gradient_check_with, random_batch, relative_error, GradCheckConfig};
pub use mlp::{log_softmax, Block, Forward, MlpParams, HIDDEN, N_ACTIONS, PARAM_COUNT};
pub use ppo::{
    clip_global_norm, global_norm, ppo_loss, ppo_update, prepare_samples, Adam, LossCoeffs, LossStats, Sample,
    TrainConfig,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("parameter buffer has {found} entries, expected {expected}")]
    Shape { expected: usize, found: usize },
    #[error("numerical fault: {0}")]
    NumericalFault(String),
    #[error("invalid train config: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}
