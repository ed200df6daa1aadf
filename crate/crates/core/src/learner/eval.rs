//! Action sampling and policy evaluation.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::gridworld::{make_task, Action, GridWorld, TaskId};

use super::mlp::{MlpParams, N_ACTIONS};
use super::LearnerError;

pub const DEFAULT_EVAL_EPISODES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSnapshot {
    pub task_id: TaskId,
    pub n_episodes: usize,
    pub mean_reward: f64,
    pub solve_rate: f64,
    pub step_index: u64,
}

/// Training instances use even generator seeds, evaluation instances odd
/// ones, so the two streams never share a layout.
pub fn train_seed(raw: u64) -> u64 {
    raw & !1
}

pub fn eval_seed(raw: u64) -> u64 {
    raw | 1
}

/// Inverse-CDF draw over action indices in order.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64; N_ACTIONS], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = k;
            if u < cum {
                return k;
            }
        }
    }
    // Rounding left the total just under u.
    last
}

pub trait Policy {
    fn act(&mut self, world: &GridWorld, rng: &mut dyn RngCore) -> Result<Action, LearnerError>;
}

/// The network policy, sampled or greedy.
#[derive(Debug, Clone, Copy)]
pub struct ParamsPolicy<'a> {
    pub params: &'a MlpParams,
    pub stochastic: bool,
}

impl Policy for ParamsPolicy<'_> {
    fn act(&mut self, world: &GridWorld, rng: &mut dyn RngCore) -> Result<Action, LearnerError> {
        let (probs, _) = self.params.policy_forward(&world.observation())?;
        let k = if self.stochastic {
            sample_action(&probs, rng)
        } else {
            // First maximum, so ties resolve by action order.
            (0..N_ACTIONS).fold(0, |best, k| if probs[k] > probs[best] { k } else { best })
        };
        Ok(Action::from_index(k).expect("action index in range"))
    }
}

/// Runs `n_episodes` on fresh evaluation instances of `task`.
pub fn evaluate_with(
    policy: &mut dyn Policy,
    task: TaskId,
    n_episodes: usize,
    rng: &mut dyn RngCore,
    step_index: u64,
) -> Result<EvalSnapshot, LearnerError> {
    assert!(n_episodes >= 1, "evaluation needs at least one episode");
    let mut total = 0.0;
    let mut solved = 0usize;
    for _ in 0..n_episodes {
        let mut world = make_task(task, eval_seed(rng.next_u64()))?;
        loop {
            let action = policy.act(&world, rng)?;
            let r = world.step(action)?;
            if r.done() {
                total += r.reward;
                solved += usize::from(r.success);
                break;
            }
        }
    }
    Ok(EvalSnapshot {
        task_id: task,
        n_episodes,
        mean_reward: total / n_episodes as f64,
        solve_rate: solved as f64 / n_episodes as f64,
        step_index,
    })
}

pub fn evaluate_policy(
    params: &MlpParams,
    task: TaskId,
    n_episodes: usize,
    stochastic: bool,
    rng: &mut dyn RngCore,
    step_index: u64,
) -> Result<EvalSnapshot, LearnerError> {
    let mut policy = ParamsPolicy { params, stochastic };
    evaluate_with(&mut policy, task, n_episodes, rng, step_index)
}
