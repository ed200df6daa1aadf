use serde::{Deserialize, Serialize};

use crate::gridworld::TaskId;

use super::distribution::SampleDistribution;
use super::{canonical_tasks, position, Outcome, SchedulerError};

pub const SM2_MIN_EF: f64 = 1.3;
pub const SM2_INITIAL_EF: f64 = 2.5;
/// Pre-normalization weight of a task that is not yet due.
pub const SM2_NOT_DUE_WEIGHT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sm2Entry {
    pub ef: f64,
    pub repetition: u32,
    /// In scheduler rounds.
    pub interval: u64,
    pub due_round: u64,
}

impl Default for Sm2Entry {
    fn default() -> Self {
        Self {
            ef: SM2_INITIAL_EF,
            repetition: 0,
            interval: 1,
            due_round: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sm2State {
    tasks: Vec<TaskId>,
    entries: Vec<Sm2Entry>,
}

impl Sm2State {
    pub fn new(tasks: &[TaskId]) -> Result<Self, SchedulerError> {
        let tasks = canonical_tasks(tasks)?;
        let entries = vec![Sm2Entry::default(); tasks.len()];
        Ok(Self { tasks, entries })
    }

    pub fn tasks(&self) -> &[TaskId] {
        &self.tasks
    }

    pub fn entries(&self) -> &[Sm2Entry] {
        &self.entries
    }

    pub fn entry(&self, task: TaskId) -> Result<Sm2Entry, SchedulerError> {
        Ok(self.entries[position(&self.tasks, task)?])
    }

    pub fn set_entry(&mut self, task: TaskId, entry: Sm2Entry) -> Result<(), SchedulerError> {
        let i = position(&self.tasks, task)?;
        self.entries[i] = entry;
        Ok(())
    }
}

/// Quality grade round(5 · reward), halves rounded away from zero.
pub fn sm2_quality(episode_reward: f64) -> Result<u8, SchedulerError> {
    if !(0.0..=1.0).contains(&episode_reward) {
        return Err(SchedulerError::RewardOutOfRange(episode_reward));
    }
    Ok((5.0 * episode_reward).round() as u8)
}

pub fn sm2_next_ef(ef: f64, q: u8) -> f64 {
    let miss = f64::from(5 - q.min(5));
    (ef + 0.1 - miss * (0.08 + miss * 0.02)).max(SM2_MIN_EF)
}

pub fn sm2_update(state: &Sm2State, outcome: &Outcome, current_round: u64) -> Result<Sm2State, SchedulerError> {
    let i = position(&state.tasks, outcome.task_id)?;
    let q = sm2_quality(outcome.episode_reward)?;
    let old = state.entries[i];
    let (repetition, interval) = if q >= 3 {
        let rep = old.repetition + 1;
        let interval = match rep {
            1 => 1,
            2 => 6,
            // Grows with the easiness factor held before this review.
            _ => ((old.interval as f64 * old.ef).round() as u64).max(1),
        };
        (rep, interval)
    } else {
        (0, 1)
    };
    let mut next = state.clone();
    next.entries[i] = Sm2Entry {
        ef: sm2_next_ef(old.ef, q),
        repetition,
        interval,
        due_round: current_round + interval,
    };
    Ok(next)
}

/// Due tasks weigh 1 + rounds overdue; tasks not yet due keep a small floor.
pub fn sm2_distribution(state: &Sm2State, current_round: u64) -> SampleDistribution {
    let w: Vec<f64> = state
        .entries
        .iter()
        .map(|e| {
            if e.due_round <= current_round {
                1.0 + (current_round - e.due_round) as f64
            } else {
                SM2_NOT_DUE_WEIGHT
            }
        })
        .collect();
    SampleDistribution::from_weights(&state.tasks, &w)
}
