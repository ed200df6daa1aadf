use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gridworld::TaskId;

use super::{canonical_tasks, position, SchedulerError};

pub const SUM_TOLERANCE: f64 = 1e-9;

/// Probabilities over a task set held in registry order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDistribution {
    tasks: Vec<TaskId>,
    probs: Vec<f64>,
}

impl SampleDistribution {
    /// Normalizes nonnegative weights; `tasks` must be in registry order.
    pub(crate) fn from_weights(tasks: &[TaskId], weights: &[f64]) -> Self {
        debug_assert_eq!(tasks.len(), weights.len());
        let total: f64 = weights.iter().sum();
        Self {
            tasks: tasks.to_vec(),
            probs: weights.iter().map(|w| w / total).collect(),
        }
    }

    /// Checked constructor for arbitrary input.
    pub fn new(tasks: &[TaskId], probs: &[f64]) -> Result<Self, SchedulerError> {
        if tasks.len() != probs.len() {
            return Err(SchedulerError::InvalidDistribution("length mismatch".into()));
        }
        let order = canonical_tasks(tasks)?;
        let probs = order
            .iter()
            .map(|t| probs[tasks.iter().position(|x| x == t).expect("same set")])
            .collect();
        let d = Self { tasks: order, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn tasks(&self) -> &[TaskId] {
        &self.tasks
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, task: TaskId) -> f64 {
        position(&self.tasks, task).map_or(0.0, |i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (TaskId, f64)> + '_ {
        self.tasks.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn validate(&self) -> Result<(), SchedulerError> {
        if self.probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(SchedulerError::InvalidDistribution(format!("bad entry in {:?}", self.probs)));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(SchedulerError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(())
    }
}

pub fn random_distribution(tasks: &[TaskId]) -> SampleDistribution {
    SampleDistribution::from_weights(tasks, &vec![1.0; tasks.len()])
}

/// Inverse-CDF draw over tasks in registry order.
pub fn select_task<R: Rng + ?Sized>(dist: &SampleDistribution, rng: &mut R) -> Result<TaskId, SchedulerError> {
    dist.validate()?;
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last = None;
    for (t, p) in dist.iter() {
        if p > 0.0 {
            cum += p;
            last = Some(t);
            if u < cum {
                return Ok(t);
            }
        }
    }
    last.ok_or_else(|| SchedulerError::InvalidDistribution("no positive entry".into()))
}
