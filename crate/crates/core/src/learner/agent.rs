//! PPO agent that trains on one task per round.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gridworld::{make_task, Action, GridWorld, TaskId};

use super::eval::{evaluate_policy, sample_action, train_seed, EvalSnapshot};
use super::gae::{RolloutBuffer, Transition};
use super::mlp::MlpParams;
use super::ppo::{ppo_update, Adam, LossStats, TrainConfig};
use super::LearnerError;

/// What one rollout + update on a task produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub task_id: TaskId,
    pub steps: u64,
    /// Mean reward over episodes that finished during the rollout, 0 if none did.
    pub episode_reward: f64,
    pub episodes: usize,
    /// Any episode in the rollout succeeded.
    pub solved: bool,
    /// Mean absolute unstandardized GAE advantage.
    pub value_error: f64,
    pub losses: LossStats,
}

/// Anything the experiment harnesses can train and evaluate.
pub trait TaskLearner {
    fn train_round(&mut self, task: TaskId) -> Result<RoundReport, LearnerError>;
    fn evaluate(&mut self, task: TaskId, n_episodes: usize) -> Result<EvalSnapshot, LearnerError>;
    fn env_steps(&self) -> u64;
}

#[derive(Debug, Clone)]
pub struct PpoAgent {
    config: TrainConfig,
    seed: u64,
    params: MlpParams,
    optimizer: Adam,
    rng: ChaCha8Rng,
    env_steps: u64,
    /// In-progress training episode per task, indexed by registry order.
    episodes: Vec<Option<GridWorld>>,
}

impl PpoAgent {
    pub fn new(config: TrainConfig, seed: u64) -> Result<Self, LearnerError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = MlpParams::init(&mut rng);
        let optimizer = Adam::new(&config);
        Ok(Self {
            config,
            seed,
            params,
            optimizer,
            rng,
            env_steps: 0,
            episodes: vec![None; TaskId::ALL.len()],
        })
    }

    pub fn params(&self) -> &MlpParams {
        &self.params
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    fn fresh_episode(&mut self, task: TaskId) -> Result<GridWorld, LearnerError> {
        Ok(make_task(task, train_seed(self.rng.next_u64()))?)
    }

    /// Collects one rollout of `rollout_len` steps on `task`, resuming its
    /// unfinished episode from the previous visit.
    pub fn collect(&mut self, task: TaskId) -> Result<(RolloutBuffer, Vec<(f64, bool)>), LearnerError> {
        let mut world = match self.episodes[task.index()].take() {
            Some(w) => w,
            None => self.fresh_episode(task)?,
        };
        let mut transitions = Vec::with_capacity(self.config.rollout_len);
        let mut finished = Vec::new();
        for _ in 0..self.config.rollout_len {
            let observation = world.observation();
            let fwd = self.params.forward(&observation);
            if !fwd.value.is_finite() || fwd.log_probs.iter().any(|x| !x.is_finite()) {
                return Err(LearnerError::NumericalFault("non-finite network output".into()));
            }
            let action = sample_action(&fwd.probs, &mut self.rng);
            let r = world.step(Action::from_index(action).expect("action index in range"))?;
            self.env_steps += 1;
            let done = r.done();
            transitions.push(Transition {
                observation,
                action,
                log_prob: fwd.log_probs[action],
                reward: r.reward,
                value: fwd.value,
                done,
            });
            if done {
                finished.push((r.reward, r.success));
                world = self.fresh_episode(task)?;
            }
        }
        let bootstrap_value = if transitions.last().is_some_and(|t| t.done) {
            0.0
        } else {
            self.params.forward(&world.observation()).value
        };
        self.episodes[task.index()] = Some(world);
        Ok((
            RolloutBuffer {
                transitions,
                bootstrap_value,
            },
            finished,
        ))
    }
}

impl TaskLearner for PpoAgent {
    fn train_round(&mut self, task: TaskId) -> Result<RoundReport, LearnerError> {
        let (buffer, finished) = self.collect(task)?;
        let (losses, adv) = ppo_update(&mut self.params, &mut self.optimizer, &buffer, &self.config, &mut self.rng)?;
        let episode_reward = if finished.is_empty() {
            0.0
        } else {
            finished.iter().map(|(r, _)| r).sum::<f64>() / finished.len() as f64
        };
        Ok(RoundReport {
            task_id: task,
            steps: buffer.transitions.len() as u64,
            episode_reward,
            episodes: finished.len(),
            solved: finished.iter().any(|(_, s)| *s),
            value_error: adv.mean_abs(),
            losses,
        })
    }

    /// Uses an rng derived from (seed, env steps, task) so evaluation never
    /// perturbs the training stream.
    fn evaluate(&mut self, task: TaskId, n_episodes: usize) -> Result<EvalSnapshot, LearnerError> {
        let mix = self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ self.env_steps.wrapping_mul(0xBF58_476D_1CE4_E5B9)
            ^ (task.index() as u64).wrapping_mul(0x94D0_49BB_1331_11EB);
        let mut rng = ChaCha8Rng::seed_from_u64(mix);
        evaluate_policy(
            &self.params,
            task,
            n_episodes,
            self.config.eval_stochastic,
            &mut rng,
            self.env_steps,
        )
    }

    fn env_steps(&self) -> u64 {
        self.env_steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TrainConfig {
        TrainConfig {
            rollout_len: 64,
            minibatch: 16,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn round_counts_steps_and_reports_finite_stats() {
        let mut a = PpoAgent::new(small(), 3).unwrap();
        let r = a.train_round(TaskId::Empty).unwrap();
        assert_eq!(r.steps, 64);
        assert_eq!(a.env_steps(), 64);
        assert!(r.value_error >= 0.0 && r.value_error.is_finite());
        assert!((0.0..=1.0).contains(&r.episode_reward));
        assert!(a.params().is_finite());
    }

    #[test]
    fn identical_seeds_give_identical_parameters() {
        let run = || {
            let mut a = PpoAgent::new(small(), 8).unwrap();
            for t in [TaskId::Empty, TaskId::DoorKey, TaskId::Empty] {
                a.train_round(t).unwrap();
            }
            let e = a.evaluate(TaskId::Empty, 3).unwrap();
            (a.params().clone(), e)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn evaluation_does_not_disturb_training() {
        let mut a = PpoAgent::new(small(), 5).unwrap();
        let mut b = a.clone();
        a.evaluate(TaskId::Empty, 4).unwrap();
        a.train_round(TaskId::Empty).unwrap();
        b.train_round(TaskId::Empty).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(PpoAgent::new(cfg, 0).is_err());
    }
}
