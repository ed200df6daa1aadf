//! Forgetting alternation between two tasks, and its cross-training variant
//! with an extra evaluated partner task.

use serde::{Deserialize, Serialize};

use crate::gridworld::TaskId;
use crate::learner::{PpoAgent, TaskLearner, TrainConfig, DEFAULT_EVAL_EPISODES};

use super::phases::{classify_forgetting, detect_phases_open, ClassifyConfig, ForgettingClass, Phase, PhaseKind, PhaseRecord};
use super::{solve_rate_series, EvalPoint, ExperimentError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlternationConfig {
    pub task_a: TaskId,
    pub task_b: TaskId,
    pub upper: f64,
    pub lower: f64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub max_total_steps: u64,
    pub classify: ClassifyConfig,
}

impl Default for AlternationConfig {
    fn default() -> Self {
        Self {
            task_a: TaskId::SimpleCrossing,
            task_b: TaskId::Empty,
            upper: 0.8,
            lower: 0.1,
            eval_every: 2_000,
            eval_episodes: DEFAULT_EVAL_EPISODES,
            max_total_steps: 2_000_000,
            classify: ClassifyConfig::default(),
        }
    }
}

impl AlternationConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.task_a == self.task_b {
            return bad("task_a and task_b must differ");
        }
        if !(0.0 <= self.lower && self.lower < self.upper) {
            return bad("thresholds need 0 <= lower < upper");
        }
        if self.eval_every == 0 || self.eval_episodes == 0 || self.max_total_steps == 0 {
            return bad("eval_every, eval_episodes and max_total_steps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternationResult {
    pub task_a: TaskId,
    pub task_b: TaskId,
    pub trace: Vec<EvalPoint>,
    /// Steps at which training switched task.
    pub switches: Vec<u64>,
    pub phases: Vec<PhaseRecord>,
    /// Phase still running when the budget ran out.
    pub open_phase: Phase,
    pub classification: ForgettingClass,
    /// Set when the budget ran out before the first threshold crossing.
    pub warning: Option<String>,
}

impl AlternationResult {
    pub fn completed_cycles(&self) -> usize {
        self.forgetting_durations().len()
    }

    pub fn forgetting_durations(&self) -> Vec<f64> {
        self.phases
            .iter()
            .filter(|p| p.kind == PhaseKind::Forgetting)
            .map(|p| p.duration() as f64)
            .collect()
    }
}

fn evaluate_all<L: TaskLearner>(
    learner: &mut L,
    trained: TaskId,
    tasks: &[TaskId],
    n: usize,
    trace: &mut Vec<EvalPoint>,
) -> Result<f64, ExperimentError> {
    let mut monitored = f64::NAN;
    for (i, &t) in tasks.iter().enumerate() {
        // A task listed twice reuses its first evaluation.
        let point = match tasks[..i].iter().position(|&u| u == t) {
            Some(j) => trace[trace.len() - i + j].clone(),
            None => EvalPoint::from_snapshot(trained, &learner.evaluate(t, n)?),
        };
        if i == 0 {
            monitored = point.solve_rate;
        }
        trace.push(point);
    }
    Ok(monitored)
}

/// Alternation loop over any learner. `eval_tasks[0]` must be `task_a`, the
/// task whose solve rate drives switching.
pub fn run_alternation_with<L: TaskLearner>(
    cfg: &AlternationConfig,
    eval_tasks: &[TaskId],
    learner: &mut L,
) -> Result<AlternationResult, ExperimentError> {
    cfg.validate()?;
    assert_eq!(eval_tasks.first(), Some(&cfg.task_a));
    let mut trace = Vec::new();
    let mut switches = Vec::new();
    let mut current = cfg.task_a;
    let mut next_eval = 0u64;
    loop {
        let steps = learner.env_steps();
        if steps >= next_eval || steps >= cfg.max_total_steps {
            let rate = evaluate_all(learner, current, eval_tasks, cfg.eval_episodes, &mut trace)?;
            next_eval = (steps / cfg.eval_every + 1) * cfg.eval_every;
            if steps >= cfg.max_total_steps {
                break;
            }
            let switch = if current == cfg.task_a {
                rate >= cfg.upper
            } else {
                rate <= cfg.lower
            };
            if switch {
                current = if current == cfg.task_a { cfg.task_b } else { cfg.task_a };
                switches.push(steps);
            }
        }
        learner.train_round(current)?;
    }

    let series = solve_rate_series(&trace, cfg.task_a);
    let (phases, open_phase) = detect_phases_open(&series, cfg.upper, cfg.lower);
    let phases: Vec<PhaseRecord> = phases
        .into_iter()
        .map(|p| PhaseRecord::new(p, cfg.task_a, cfg.task_b))
        .collect();
    let warning = switches.is_empty().then(|| {
        format!(
            "{} never reached solve rate {} within {} steps",
            cfg.task_a, cfg.upper, cfg.max_total_steps
        )
    });
    let durations: Vec<f64> = phases
        .iter()
        .filter(|p| p.kind == PhaseKind::Forgetting)
        .map(|p| p.duration() as f64)
        .collect();
    Ok(AlternationResult {
        task_a: cfg.task_a,
        task_b: cfg.task_b,
        trace,
        switches,
        phases,
        open_phase,
        classification: classify_forgetting(&durations, &cfg.classify),
        warning,
    })
}

pub fn run_forgetting_alternation(
    cfg: &AlternationConfig,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<AlternationResult, ExperimentError> {
    let mut agent = PpoAgent::new(train_cfg.clone(), seed)?;
    run_alternation_with(cfg, &[cfg.task_a, cfg.task_b], &mut agent)
}

/// Mean solve rate of `monitored` over eval points inside the phases where
/// `trained` was being trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucEntry {
    pub trained: TaskId,
    pub monitored: TaskId,
    pub auc: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstrainResult {
    /// (task_x, task_y): x is the monitored task, y the alternate.
    pub pair: (TaskId, TaskId),
    pub partner: Option<TaskId>,
    pub alternation: AlternationResult,
    pub auc: Vec<AucEntry>,
}

impl CrosstrainResult {
    pub fn auc_of(&self, trained: TaskId, monitored: TaskId) -> Option<f64> {
        self.auc
            .iter()
            .find(|e| e.trained == trained && e.monitored == monitored)
            .map(|e| e.auc)
    }
}

fn auc_table(alt: &AlternationResult, eval_tasks: &[TaskId]) -> Vec<AucEntry> {
    let mut out = Vec::new();
    for (trained, kind) in [(alt.task_a, PhaseKind::Learning), (alt.task_b, PhaseKind::Forgetting)] {
        let phases: Vec<Phase> = alt.phases.iter().filter(|p| p.kind == kind).map(|p| p.phase()).collect();
        let mut seen = Vec::new();
        for &m in eval_tasks {
            if seen.contains(&m) {
                continue;
            }
            seen.push(m);
            let rates: Vec<f64> = alt
                .trace
                .iter()
                .filter(|p| p.eval_task == m && phases.iter().any(|ph| ph.contains(p.step)))
                .map(|p| p.solve_rate)
                .collect();
            if !rates.is_empty() {
                out.push(AucEntry {
                    trained,
                    monitored: m,
                    auc: rates.iter().sum::<f64>() / rates.len() as f64,
                    n_points: rates.len(),
                });
            }
        }
    }
    out
}

pub fn run_crosstrain_with<L: TaskLearner>(
    cfg: &AlternationConfig,
    partner: Option<TaskId>,
    learner: &mut L,
) -> Result<CrosstrainResult, ExperimentError> {
    let mut eval_tasks = vec![cfg.task_a, cfg.task_b];
    eval_tasks.extend(partner);
    let alternation = run_alternation_with(cfg, &eval_tasks, learner)?;
    let auc = auc_table(&alternation, &eval_tasks);
    Ok(CrosstrainResult {
        pair: (cfg.task_a, cfg.task_b),
        partner,
        alternation,
        auc,
    })
}

pub fn run_crosstrain(
    cfg: &AlternationConfig,
    partner: Option<TaskId>,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<CrosstrainResult, ExperimentError> {
    let mut agent = PpoAgent::new(train_cfg.clone(), seed)?;
    run_crosstrain_with(cfg, partner, &mut agent)
}

/// A(partner | x): mean partner solve rate over eval points inside x's
/// learning phases.
pub fn partner_auc(result: &CrosstrainResult) -> Result<f64, ExperimentError> {
    let x = result.pair.0;
    let partner = result
        .partner
        .ok_or_else(|| ExperimentError::Config("cross-training run has no partner task".into()))?;
    result
        .auc_of(x, partner)
        .ok_or_else(|| ExperimentError::NoLearningPhases(format!("{x} run")))
}

/// A(y|x) − A(x|y): positive when training x helps y more than the reverse.
pub fn transfer_asymmetry(result_xy: &CrosstrainResult, result_yx: &CrosstrainResult) -> Result<f64, ExperimentError> {
    let (x, y) = (result_xy.pair.0, result_yx.pair.0);
    if result_xy.partner != Some(y) || result_yx.partner != Some(x) {
        return Err(ExperimentError::Config(format!(
            "runs are not mirrored: {x} with partner {:?}, {y} with partner {:?}",
            result_xy.partner, result_yx.partner
        )));
    }
    Ok(partner_auc(result_xy)? - partner_auc(result_yx)?)
}

#[cfg(test)]
mod tests {
    use super::super::scripted::ScriptedLearner;
    use super::*;

    fn cfg(max_total_steps: u64) -> AlternationConfig {
        AlternationConfig {
            eval_every: 100,
            max_total_steps,
            ..AlternationConfig::default()
        }
    }

    #[test]
    fn scripted_rates_switch_twice() {
        let mut l = ScriptedLearner::new(100).with_rates(TaskId::SimpleCrossing, &[0.0, 0.9, 0.05, 0.9]);
        let r = run_alternation_with(&cfg(300), &[TaskId::SimpleCrossing, TaskId::Empty], &mut l).unwrap();
        assert_eq!(r.switches, vec![100, 200]);
        let kinds: Vec<PhaseKind> = r.phases.iter().map(|p| p.kind).collect();
        assert_eq!(kinds, vec![PhaseKind::Learning, PhaseKind::Forgetting, PhaseKind::Learning]);
        assert_eq!(r.phases[1].trained_task, TaskId::Empty);
        assert_eq!(l.trained(), &[TaskId::SimpleCrossing, TaskId::Empty, TaskId::SimpleCrossing]);
        assert!(r.warning.is_none());
    }

    #[test]
    fn unreachable_threshold_warns() {
        let mut l = ScriptedLearner::new(100).with_rates(TaskId::SimpleCrossing, &[0.0, 1.0, 1.0, 1.0]);
        let c = AlternationConfig {
            upper: 1.1,
            ..cfg(300)
        };
        let r = run_alternation_with(&c, &[TaskId::SimpleCrossing, TaskId::Empty], &mut l).unwrap();
        assert!(r.switches.is_empty());
        assert!(r.phases.is_empty());
        assert_eq!(r.open_phase.kind, PhaseKind::Learning);
        assert!(r.warning.is_some());
    }

    #[test]
    fn crosstrain_evaluates_three_trains_two() {
        let c = AlternationConfig {
            task_a: TaskId::Unlock,
            task_b: TaskId::Empty,
            ..cfg(400)
        };
        let mut l = ScriptedLearner::new(100)
            .with_rates(TaskId::Unlock, &[0.0, 0.9, 0.0, 0.9, 0.0])
            .with_rates(TaskId::DoorKey, &[0.0, 0.4, 0.2, 0.6, 0.0]);
        let r = run_crosstrain_with(&c, Some(TaskId::DoorKey), &mut l).unwrap();
        let evaluated: std::collections::BTreeSet<TaskId> = r.alternation.trace.iter().map(|p| p.eval_task).collect();
        assert_eq!(evaluated.len(), 3);
        assert!(l.trained().iter().all(|t| [TaskId::Unlock, TaskId::Empty].contains(t)));
        // Learning phases [0, 100] and [200, 300] hold DoorKey points 0, 0.4, 0.2, 0.6.
        assert!((r.auc_of(TaskId::Unlock, TaskId::DoorKey).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn partner_equal_to_trained_task_copies_its_trace() {
        let c = AlternationConfig {
            task_a: TaskId::Unlock,
            task_b: TaskId::Empty,
            ..cfg(300)
        };
        let mut l = ScriptedLearner::new(100).with_rates(TaskId::Unlock, &[0.0, 0.9, 0.0, 0.9]);
        let r = run_crosstrain_with(&c, Some(TaskId::Unlock), &mut l).unwrap();
        let s = |i: usize| {
            r.alternation
                .trace
                .iter()
                .skip(i)
                .step_by(3)
                .map(|p| (p.step, p.solve_rate))
                .collect::<Vec<_>>()
        };
        assert_eq!(s(0), s(2));
    }

    #[test]
    fn invalid_configs() {
        let mut l = ScriptedLearner::new(100);
        let same = AlternationConfig {
            task_b: TaskId::SimpleCrossing,
            ..cfg(100)
        };
        assert!(run_alternation_with(&same, &[TaskId::SimpleCrossing], &mut l).is_err());
        let inverted = AlternationConfig {
            upper: 0.1,
            lower: 0.5,
            ..cfg(100)
        };
        assert!(inverted.validate().is_err());
    }
}
