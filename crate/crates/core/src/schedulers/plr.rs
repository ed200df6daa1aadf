use serde::{Deserialize, Serialize};

use crate::gridworld::TaskId;

use super::distribution::SampleDistribution;
use super::{canonical_tasks, position, Outcome, SchedulerError};

pub const PLR_TEMPERATURE: f64 = 0.1;
pub const PLR_STALENESS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlrEntry {
    pub score: f64,
    /// Round of the latest report, -1 while unseen.
    pub last_round: i64,
    pub seen: bool,
}

impl Default for PlrEntry {
    fn default() -> Self {
        Self {
            score: 0.0,
            last_round: -1,
            seen: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlrState {
    tasks: Vec<TaskId>,
    entries: Vec<PlrEntry>,
    /// Rank temperature β.
    pub temperature: f64,
    /// Staleness mixing weight ρ.
    pub staleness_coeff: f64,
}

impl PlrState {
    pub fn new(tasks: &[TaskId]) -> Result<Self, SchedulerError> {
        Self::with_params(tasks, PLR_TEMPERATURE, PLR_STALENESS)
    }

    pub fn with_params(tasks: &[TaskId], temperature: f64, staleness_coeff: f64) -> Result<Self, SchedulerError> {
        assert!(temperature > 0.0, "temperature must be positive");
        assert!((0.0..=1.0).contains(&staleness_coeff), "staleness coefficient must lie in [0, 1]");
        let tasks = canonical_tasks(tasks)?;
        let entries = vec![PlrEntry::default(); tasks.len()];
        Ok(Self {
            tasks,
            entries,
            temperature,
            staleness_coeff,
        })
    }

    pub fn tasks(&self) -> &[TaskId] {
        &self.tasks
    }

    pub fn entries(&self) -> &[PlrEntry] {
        &self.entries
    }

    pub fn entry(&self, task: TaskId) -> Result<PlrEntry, SchedulerError> {
        Ok(self.entries[position(&self.tasks, task)?])
    }

    pub fn set_entry(&mut self, task: TaskId, entry: PlrEntry) -> Result<(), SchedulerError> {
        assert!(entry.score >= 0.0, "score must be nonnegative");
        let i = position(&self.tasks, task)?;
        self.entries[i] = entry;
        Ok(())
    }
}

/// Replaces the task's score with the reported value error.
pub fn plr_update(state: &PlrState, outcome: &Outcome) -> Result<PlrState, SchedulerError> {
    let i = position(&state.tasks, outcome.task_id)?;
    let mut next = state.clone();
    next.entries[i] = PlrEntry {
        score: outcome.value_error.max(0.0),
        last_round: outcome.round as i64,
        seen: true,
    };
    Ok(next)
}

/// Rank weights (1/rank)^(1/β), scores descending with ties in registry
/// order; `rank_weights[i]` belongs to `scores[i]`.
pub(crate) fn rank_weights(scores: &[f64], temperature: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut w = vec![0.0; scores.len()];
    for (r, &i) in order.iter().enumerate() {
        w[i] = (1.0 / (r + 1) as f64).powf(1.0 / temperature);
    }
    w
}

pub fn plr_distribution(state: &PlrState, current_round: u64) -> SampleDistribution {
    let unseen: Vec<f64> = state.entries.iter().map(|e| if e.seen { 0.0 } else { 1.0 }).collect();
    if unseen.iter().any(|&u| u > 0.0) {
        return SampleDistribution::from_weights(&state.tasks, &unseen);
    }
    let scores: Vec<f64> = state.entries.iter().map(|e| e.score).collect();
    let h = rank_weights(&scores, state.temperature);
    let h_sum: f64 = h.iter().sum();
    let stale: Vec<f64> = state
        .entries
        .iter()
        .map(|e| (current_round as i64 - e.last_round).max(0) as f64)
        .collect();
    let stale_sum: f64 = stale.iter().sum();
    let n = state.tasks.len() as f64;
    let rho = state.staleness_coeff;
    let p: Vec<f64> = h
        .iter()
        .zip(&stale)
        .map(|(hi, si)| {
            let ps = if stale_sum > 0.0 { si / stale_sum } else { 1.0 / n };
            (1.0 - rho) * (hi / h_sum) + rho * ps
        })
        .collect();
    SampleDistribution::from_weights(&state.tasks, &p)
}
