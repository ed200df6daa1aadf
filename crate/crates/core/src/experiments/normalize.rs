//! Per-task normalization of curriculum evaluation rewards.

use serde::{Deserialize, Serialize};

use crate::gridworld::TaskId;
use crate::schedulers::Method;

use super::curriculum::CurriculumResult;
use super::stats::Spread;
use super::ExperimentError;

const REF_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub method: Method,
    pub seed: u64,
    /// Mean normalized reward over tasks at each eval point.
    pub trace: Vec<f64>,
    /// Normalized per-task reward at each eval point, `[point][task]`.
    pub per_task: Vec<Vec<f64>>,
    pub normalized_max: f64,
    pub normalized_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: Method,
    pub n_runs: usize,
    pub normalized_max: Spread,
    pub normalized_final: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedResults {
    pub tasks: Vec<TaskId>,
    /// Eval rounds shared by every run.
    pub rounds: Vec<u64>,
    /// Best mean reward per task; one entry per method when normalizing
    /// methods separately, else a single shared row.
    pub reference: Vec<(Option<Method>, Vec<f64>)>,
    pub runs: Vec<RunScore>,
    pub methods: Vec<MethodStats>,
}

fn check_cadence(runs: &[CurriculumResult]) -> Result<(Vec<TaskId>, Vec<u64>), ExperimentError> {
    let first = runs
        .first()
        .ok_or_else(|| ExperimentError::CadenceMismatch("no runs to normalize".into()))?;
    let rounds: Vec<u64> = first.evals.iter().map(|r| r.round).collect();
    if rounds.is_empty() {
        return Err(ExperimentError::CadenceMismatch("runs have no eval points".into()));
    }
    for r in runs {
        if r.tasks != first.tasks {
            return Err(ExperimentError::CadenceMismatch(format!(
                "{} seed {} evaluates a different task set",
                r.method, r.seed
            )));
        }
        let rr: Vec<u64> = r.evals.iter().map(|e| e.round).collect();
        if rr != rounds {
            return Err(ExperimentError::CadenceMismatch(format!(
                "{} seed {} evaluates at rounds {:?}, expected {:?}",
                r.method, r.seed, rr, rounds
            )));
        }
        for row in &r.evals {
            let tasks: Vec<TaskId> = row.evals.iter().map(|e| e.task_id).collect();
            if tasks != first.tasks {
                return Err(ExperimentError::CadenceMismatch(format!(
                    "{} seed {} round {} does not cover every task",
                    r.method, r.seed, row.round
                )));
            }
        }
    }
    Ok((first.tasks.clone(), rounds))
}

fn reference(runs: &[&CurriculumResult], n_tasks: usize) -> Vec<f64> {
    let mut best = vec![0.0f64; n_tasks];
    for r in runs {
        for row in &r.evals {
            for (b, e) in best.iter_mut().zip(&row.evals) {
                *b = b.max(e.mean_reward);
            }
        }
    }
    best
}

/// Divides each task's mean reward by the best value seen for that task,
/// averages over tasks per eval point and summarizes each method's runs by
/// median and quartiles. With `all_methods` the reference spans every run;
/// otherwise each method is normalized against its own runs only.
pub fn normalize_results(runs: &[CurriculumResult], all_methods: bool) -> Result<NormalizedResults, ExperimentError> {
    let (tasks, rounds) = check_cadence(runs)?;
    let mut methods: Vec<Method> = Vec::new();
    for r in runs {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods.sort_by_key(|m| Method::ALL.iter().position(|x| x == m));

    let reference_rows: Vec<(Option<Method>, Vec<f64>)> = if all_methods {
        vec![(None, reference(&runs.iter().collect::<Vec<_>>(), tasks.len()))]
    } else {
        methods
            .iter()
            .map(|&m| {
                let own: Vec<&CurriculumResult> = runs.iter().filter(|r| r.method == m).collect();
                (Some(m), reference(&own, tasks.len()))
            })
            .collect()
    };
    let ref_for = |m: Method| -> &Vec<f64> {
        &reference_rows
            .iter()
            .find(|(rm, _)| rm.is_none() || *rm == Some(m))
            .expect("reference row for every method")
            .1
    };

    let scores: Vec<RunScore> = runs
        .iter()
        .map(|r| {
            let refs = ref_for(r.method);
            let per_task: Vec<Vec<f64>> = r
                .evals
                .iter()
                .map(|row| {
                    row.evals
                        .iter()
                        .zip(refs)
                        .map(|(e, &rf)| (e.mean_reward / rf.max(REF_FLOOR)).clamp(0.0, 1.0))
                        .collect()
                })
                .collect();
            let trace: Vec<f64> = per_task
                .iter()
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
                .collect();
            RunScore {
                method: r.method,
                seed: r.seed,
                normalized_max: trace.iter().copied().fold(0.0, f64::max),
                normalized_final: *trace.last().expect("nonempty cadence"),
                trace,
                per_task,
            }
        })
        .collect();

    let stats = methods
        .iter()
        .map(|&m| {
            let own: Vec<&RunScore> = scores.iter().filter(|s| s.method == m).collect();
            let maxes: Vec<f64> = own.iter().map(|s| s.normalized_max).collect();
            let finals: Vec<f64> = own.iter().map(|s| s.normalized_final).collect();
            MethodStats {
                method: m,
                n_runs: own.len(),
                normalized_max: Spread::of(&maxes),
                normalized_final: Spread::of(&finals),
            }
        })
        .collect();

    Ok(NormalizedResults {
        tasks,
        rounds,
        reference: reference_rows,
        runs: scores,
        methods: stats,
    })
}
