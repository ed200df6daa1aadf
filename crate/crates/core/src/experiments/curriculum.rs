//! Scheduler-driven curriculum over a task set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gridworld::TaskId;
use crate::learner::{EvalSnapshot, PpoAgent, TaskLearner, TrainConfig, DEFAULT_EVAL_EPISODES};
use crate::schedulers::{select_task, Method, Outcome, Scheduler};

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub tasks: Vec<TaskId>,
    pub total_rounds: u64,
    pub eval_every_rounds: u64,
    pub eval_episodes: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            tasks: TaskId::ALL.to_vec(),
            total_rounds: 400,
            eval_every_rounds: 20,
            eval_episodes: DEFAULT_EVAL_EPISODES,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.tasks.is_empty() || self.total_rounds == 0 || self.eval_every_rounds == 0 || self.eval_episodes == 0 {
            return Err(ExperimentError::Config(
                "tasks, total_rounds, eval_every_rounds and eval_episodes must be nonempty/positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub round: u64,
    pub selected_task: TaskId,
    pub probability: f64,
    pub outcome: Outcome,
}

/// Evaluation of every task after `round` rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub round: u64,
    pub step: u64,
    pub evals: Vec<EvalSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumResult {
    pub method: Method,
    pub seed: u64,
    pub tasks: Vec<TaskId>,
    pub selections: Vec<SelectionRecord>,
    pub evals: Vec<EvalRow>,
}

impl CurriculumResult {
    pub fn selection_counts(&self) -> Vec<(TaskId, usize)> {
        self.tasks
            .iter()
            .map(|&t| (t, self.selections.iter().filter(|s| s.selected_task == t).count()))
            .collect()
    }
}

/// Selection stream seed, kept apart from the learner's own stream.
fn selection_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5E1E_C7ED_0000_0001)
}

pub fn run_curriculum_with<L: TaskLearner>(
    method: Method,
    cfg: &ScheduleConfig,
    seed: u64,
    learner: &mut L,
) -> Result<CurriculumResult, ExperimentError> {
    cfg.validate()?;
    let mut scheduler = Scheduler::new(method, &cfg.tasks)?;
    let tasks = scheduler.tasks().to_vec();
    let mut rng = selection_rng(seed);
    let mut selections = Vec::with_capacity(cfg.total_rounds as usize);
    let mut evals = Vec::new();
    for round in 0..cfg.total_rounds {
        let dist = scheduler.distribution(round);
        let task = select_task(&dist, &mut rng)?;
        let report = learner.train_round(task)?;
        let outcome = Outcome {
            task_id: task,
            episode_reward: report.episode_reward,
            solved: report.solved,
            value_error: report.value_error,
            round,
        };
        scheduler.update(&outcome)?;
        selections.push(SelectionRecord {
            round,
            selected_task: task,
            probability: dist.get(task),
            outcome,
        });
        if (round + 1) % cfg.eval_every_rounds == 0 {
            let row = tasks
                .iter()
                .map(|&t| learner.evaluate(t, cfg.eval_episodes))
                .collect::<Result<Vec<_>, _>>()?;
            evals.push(EvalRow {
                round: round + 1,
                step: learner.env_steps(),
                evals: row,
            });
        }
    }
    Ok(CurriculumResult {
        method,
        seed,
        tasks,
        selections,
        evals,
    })
}

pub fn run_curriculum(
    method: Method,
    cfg: &ScheduleConfig,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<CurriculumResult, ExperimentError> {
    let mut agent = PpoAgent::new(train_cfg.clone(), seed)?;
    run_curriculum_with(method, cfg, seed, &mut agent)
}
