//! Experiment harnesses: forgetting alternation, cross-training and
//! curriculum comparison, plus the analyses run on their traces.

mod alternation;
mod curriculum;
mod normalize;
mod phases;
pub mod scripted;
mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridworld::TaskId;
use crate::learner::{EvalSnapshot, LearnerError};
use crate::schedulers::SchedulerError;

pub use alternation::{
    partner_auc, run_alternation_with, run_crosstrain, run_crosstrain_with, run_forgetting_alternation,
    transfer_asymmetry, AlternationConfig, AlternationResult, AucEntry, CrosstrainResult,
};
pub use curriculum::{run_curriculum, run_curriculum_with, CurriculumResult, EvalRow, ScheduleConfig, SelectionRecord};
pub use normalize::{normalize_results, MethodStats, NormalizedResults, RunScore};
pub use phases::{
    classify_forgetting, detect_phases, spearman, ClassifyConfig, ForgettingClass, ForgettingLabel, Phase, PhaseKind,
    PhaseRecord,
};
pub use stats::{least_squares_slope, median, quantile, Spread};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("no completed learning phases in {0}")]
    NoLearningPhases(String),
    #[error("runs are not comparable: {0}")]
    CadenceMismatch(String),
}

/// One evaluation of one task, tagged with what was being trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: u64,
    pub trained_task: TaskId,
    pub eval_task: TaskId,
    pub solve_rate: f64,
    pub mean_reward: f64,
}

impl EvalPoint {
    pub fn from_snapshot(trained_task: TaskId, s: &EvalSnapshot) -> Self {
        Self {
            step: s.step_index,
            trained_task,
            eval_task: s.task_id,
            solve_rate: s.solve_rate,
            mean_reward: s.mean_reward,
        }
    }
}

/// (step, solve rate) series for one evaluated task, in step order.
pub fn solve_rate_series(trace: &[EvalPoint], task: TaskId) -> Vec<(u64, f64)> {
    trace
        .iter()
        .filter(|p| p.eval_task == task)
        .map(|p| (p.step, p.solve_rate))
        .collect()
}
