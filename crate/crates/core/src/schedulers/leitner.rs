use serde::{Deserialize, Serialize};

use crate::gridworld::TaskId;

use super::distribution::SampleDistribution;
use super::{canonical_tasks, position, Outcome, SchedulerError};

pub const LEITNER_BOXES: u8 = 5;

/// Box number (1..=5) per task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeitnerState {
    tasks: Vec<TaskId>,
    boxes: Vec<u8>,
}

impl LeitnerState {
    /// Every task starts in box 1.
    pub fn new(tasks: &[TaskId]) -> Result<Self, SchedulerError> {
        let tasks = canonical_tasks(tasks)?;
        let boxes = vec![1; tasks.len()];
        Ok(Self { tasks, boxes })
    }

    pub fn tasks(&self) -> &[TaskId] {
        &self.tasks
    }

    pub fn boxes(&self) -> &[u8] {
        &self.boxes
    }

    pub fn box_of(&self, task: TaskId) -> Result<u8, SchedulerError> {
        Ok(self.boxes[position(&self.tasks, task)?])
    }

    pub fn set_box(&mut self, task: TaskId, b: u8) -> Result<(), SchedulerError> {
        assert!((1..=LEITNER_BOXES).contains(&b), "box {b} out of range");
        let i = position(&self.tasks, task)?;
        self.boxes[i] = b;
        Ok(())
    }
}

/// Solved moves the task up one box (capped at 5); unsolved sends it to box 1.
pub fn leitner_update(state: &LeitnerState, outcome: &Outcome) -> Result<LeitnerState, SchedulerError> {
    let i = position(&state.tasks, outcome.task_id)?;
    let mut next = state.clone();
    next.boxes[i] = if outcome.solved {
        (state.boxes[i] + 1).min(LEITNER_BOXES)
    } else {
        1
    };
    Ok(next)
}

/// Weight 2^(1 - box): each box up halves the sampling weight.
pub fn leitner_distribution(state: &LeitnerState) -> SampleDistribution {
    let w: Vec<f64> = state.boxes.iter().map(|&b| 0.5f64.powi(i32::from(b) - 1)).collect();
    SampleDistribution::from_weights(&state.tasks, &w)
}
