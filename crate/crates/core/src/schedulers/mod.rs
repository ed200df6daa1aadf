//! Task schedulers: Leitner boxes, SM-2, prioritized replay on value error,
//! and a uniform baseline. Each turns training outcomes into a sampling
//! distribution over a fixed task set.

mod distribution;
mod leitner;
mod plr;
mod sm2;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridworld::TaskId;

pub use distribution::{random_distribution, select_task, SampleDistribution, SUM_TOLERANCE};
pub use leitner::{leitner_distribution, leitner_update, LeitnerState, LEITNER_BOXES};
pub use plr::{plr_distribution, plr_update, PlrEntry, PlrState, PLR_STALENESS, PLR_TEMPERATURE};
pub use sm2::{
    sm2_distribution, sm2_next_ef, sm2_quality, sm2_update, Sm2Entry, Sm2State, SM2_INITIAL_EF, SM2_MIN_EF, SM2_NOT_DUE_WEIGHT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("task {0} is not in the scheduler's task set")]
    UnknownTask(TaskId),
    #[error("task set must be nonempty and free of duplicates")]
    BadTaskSet,
    #[error("episode reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("unknown scheduling method {0:?}")]
    UnknownMethod(String),
}

/// Training result for one scheduler round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub task_id: TaskId,
    pub episode_reward: f64,
    pub solved: bool,
    pub value_error: f64,
    pub round: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Leitner,
    Supermemo,
    Plr,
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Leitner, Method::Supermemo, Method::Plr, Method::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Leitner => "leitner",
            Method::Supermemo => "supermemo",
            Method::Plr => "plr",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SchedulerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| SchedulerError::UnknownMethod(s.to_string()))
    }
}

/// Sorts into registry order and rejects empty or repeated sets.
pub(crate) fn canonical_tasks(tasks: &[TaskId]) -> Result<Vec<TaskId>, SchedulerError> {
    let mut v = tasks.to_vec();
    v.sort();
    let before = v.len();
    v.dedup();
    if v.is_empty() || v.len() != before {
        return Err(SchedulerError::BadTaskSet);
    }
    Ok(v)
}

pub(crate) fn position(tasks: &[TaskId], task: TaskId) -> Result<usize, SchedulerError> {
    tasks.binary_search(&task).map_err(|_| SchedulerError::UnknownTask(task))
}

/// Any of the four schedulers behind one interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "state", rename_all = "lowercase")]
pub enum Scheduler {
    Leitner(LeitnerState),
    Supermemo(Sm2State),
    Plr(PlrState),
    Random { tasks: Vec<TaskId> },
}

impl Scheduler {
    pub fn new(method: Method, tasks: &[TaskId]) -> Result<Self, SchedulerError> {
        Ok(match method {
            Method::Leitner => Scheduler::Leitner(LeitnerState::new(tasks)?),
            Method::Supermemo => Scheduler::Supermemo(Sm2State::new(tasks)?),
            Method::Plr => Scheduler::Plr(PlrState::new(tasks)?),
            Method::Random => Scheduler::Random {
                tasks: canonical_tasks(tasks)?,
            },
        })
    }

    pub fn method(&self) -> Method {
        match self {
            Scheduler::Leitner(_) => Method::Leitner,
            Scheduler::Supermemo(_) => Method::Supermemo,
            Scheduler::Plr(_) => Method::Plr,
            Scheduler::Random { .. } => Method::Random,
        }
    }

    pub fn tasks(&self) -> &[TaskId] {
        match self {
            Scheduler::Leitner(s) => s.tasks(),
            Scheduler::Supermemo(s) => s.tasks(),
            Scheduler::Plr(s) => s.tasks(),
            Scheduler::Random { tasks } => tasks,
        }
    }

    pub fn distribution(&self, current_round: u64) -> SampleDistribution {
        match self {
            Scheduler::Leitner(s) => leitner_distribution(s),
            Scheduler::Supermemo(s) => sm2_distribution(s, current_round),
            Scheduler::Plr(s) => plr_distribution(s, current_round),
            Scheduler::Random { tasks } => random_distribution(tasks),
        }
    }

    pub fn update(&mut self, outcome: &Outcome) -> Result<(), SchedulerError> {
        match self {
            Scheduler::Leitner(s) => *s = leitner_update(s, outcome)?,
            Scheduler::Supermemo(s) => *s = sm2_update(s, outcome, outcome.round)?,
            Scheduler::Plr(s) => *s = plr_update(s, outcome)?,
            Scheduler::Random { tasks } => {
                position(tasks, outcome.task_id)?;
            }
        }
        Ok(())
    }

    /// JSON snapshot of the scheduler state for selection logs.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("scheduler state serializes")
    }
}
