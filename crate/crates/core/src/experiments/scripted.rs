//! Deterministic stand-in learner for exercising the harnesses without
//! training a network.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gridworld::TaskId;
use crate::learner::{EvalSnapshot, LearnerError, LossStats, RoundReport, TaskLearner};

/// Plays back fixed solve-rate sequences: the k-th evaluation of a task
/// returns its k-th listed rate (the last one once exhausted, 0 if none).
/// Mean reward equals the solve rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptedLearner {
    steps_per_round: u64,
    steps: u64,
    rates: BTreeMap<TaskId, Vec<f64>>,
    eval_counts: BTreeMap<TaskId, usize>,
    trained: Vec<TaskId>,
    reward: f64,
    solved: bool,
    value_error: f64,
}

impl ScriptedLearner {
    pub fn new(steps_per_round: u64) -> Self {
        Self {
            steps_per_round,
            steps: 0,
            rates: BTreeMap::new(),
            eval_counts: BTreeMap::new(),
            trained: Vec::new(),
            reward: 0.0,
            solved: false,
            value_error: 0.0,
        }
    }

    pub fn with_rates(mut self, task: TaskId, rates: &[f64]) -> Self {
        self.rates.insert(task, rates.to_vec());
        self
    }

    /// What every training round reports.
    pub fn with_outcome(mut self, reward: f64, solved: bool, value_error: f64) -> Self {
        self.reward = reward;
        self.solved = solved;
        self.value_error = value_error;
        self
    }

    pub fn trained(&self) -> &[TaskId] {
        &self.trained
    }
}

impl TaskLearner for ScriptedLearner {
    fn train_round(&mut self, task: TaskId) -> Result<RoundReport, LearnerError> {
        self.steps += self.steps_per_round;
        self.trained.push(task);
        Ok(RoundReport {
            task_id: task,
            steps: self.steps_per_round,
            episode_reward: self.reward,
            episodes: 1,
            solved: self.solved,
            value_error: self.value_error,
            losses: LossStats::default(),
        })
    }

    fn evaluate(&mut self, task: TaskId, n_episodes: usize) -> Result<EvalSnapshot, LearnerError> {
        let k = self.eval_counts.entry(task).or_insert(0);
        let rate = self
            .rates
            .get(&task)
            .and_then(|r| r.get(*k).or(r.last()))
            .copied()
            .unwrap_or(0.0);
        *k += 1;
        Ok(EvalSnapshot {
            task_id: task,
            n_episodes,
            mean_reward: rate,
            solve_rate: rate,
            step_index: self.steps,
        })
    }

    fn env_steps(&self) -> u64 {
        self.steps
    }
}
