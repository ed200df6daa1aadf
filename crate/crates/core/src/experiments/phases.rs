//! Hysteresis phase detection and forgetting-curve classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gridworld::TaskId;

use super::stats::least_squares_slope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Learning,
    Forgetting,
}

impl PhaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseKind::Learning => "learning",
            PhaseKind::Forgetting => "forgetting",
        }
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A phase of the monitored task's trace, `[start_step, end_step]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub kind: PhaseKind,
    pub start_step: u64,
    pub end_step: u64,
}

impl Phase {
    pub fn duration(&self) -> u64 {
        self.end_step - self.start_step
    }

    pub fn contains(&self, step: u64) -> bool {
        (self.start_step..=self.end_step).contains(&step)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub kind: PhaseKind,
    pub trained_task: TaskId,
    pub monitored_task: TaskId,
    pub start_step: u64,
    pub end_step: u64,
}

impl PhaseRecord {
    /// Learning phases train the monitored task, forgetting phases the other one.
    pub fn new(phase: Phase, monitored: TaskId, other: TaskId) -> Self {
        Self {
            kind: phase.kind,
            trained_task: match phase.kind {
                PhaseKind::Learning => monitored,
                PhaseKind::Forgetting => other,
            },
            monitored_task: monitored,
            start_step: phase.start_step,
            end_step: phase.end_step,
        }
    }

    pub fn duration(&self) -> u64 {
        self.end_step - self.start_step
    }

    pub fn phase(&self) -> Phase {
        Phase {
            kind: self.kind,
            start_step: self.start_step,
            end_step: self.end_step,
        }
    }
}

/// Two-threshold automaton over a step-sorted trace. Starts learning at
/// step 0; a learning phase closes at the first sample ≥ `upper`, a
/// forgetting phase at the first sample ≤ `lower`. Returns completed phases
/// and the phase still open at the end of the trace.
pub fn detect_phases_open(trace: &[(u64, f64)], upper: f64, lower: f64) -> (Vec<Phase>, Phase) {
    assert!(lower < upper, "lower threshold must be below upper");
    let mut done = Vec::new();
    let mut open = Phase {
        kind: PhaseKind::Learning,
        start_step: 0,
        end_step: 0,
    };
    for &(step, rate) in trace {
        open.end_step = step;
        let crossed = match open.kind {
            PhaseKind::Learning => rate >= upper,
            PhaseKind::Forgetting => rate <= lower,
        };
        if crossed {
            if step > open.start_step {
                done.push(open);
            }
            open = Phase {
                kind: match open.kind {
                    PhaseKind::Learning => PhaseKind::Forgetting,
                    PhaseKind::Forgetting => PhaseKind::Learning,
                },
                start_step: step,
                end_step: step,
            };
        }
    }
    (done, open)
}

/// Completed phases only; the unterminated final phase is dropped.
pub fn detect_phases(trace: &[(u64, f64)], upper: f64, lower: f64) -> Vec<Phase> {
    detect_phases_open(trace, upper, lower).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForgettingLabel {
    Decreasing,
    Periodic,
    Inconclusive,
}

impl ForgettingLabel {
    pub const ALL: [ForgettingLabel; 3] = [
        ForgettingLabel::Decreasing,
        ForgettingLabel::Periodic,
        ForgettingLabel::Inconclusive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ForgettingLabel::Decreasing => "decreasing",
            ForgettingLabel::Periodic => "periodic",
            ForgettingLabel::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for ForgettingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub min_cycles: usize,
    /// ρ at or above this (with positive slope) reads as decreasing forgetting.
    pub decreasing_rho: f64,
    /// |ρ| below this reads as periodic.
    pub periodic_abs_rho: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            min_cycles: 3,
            decreasing_rho: 0.6,
            periodic_abs_rho: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForgettingClass {
    pub label: ForgettingLabel,
    pub spearman_rho: f64,
    pub slope: f64,
    pub n_cycles: usize,
}

/// Average ranks (1-based), ties sharing their mean rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation of `ys` against their index, 0 when the
/// ranks have no variance.
pub fn spearman(ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 2 {
        return 0.0;
    }
    let rx: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let ry = ranks(ys);
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in rx.iter().zip(&ry) {
        sxy += (x - mean) * (y - mean);
        sxx += (x - mean) * (x - mean);
        syy += (y - mean) * (y - mean);
    }
    if syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn classify_forgetting(durations: &[f64], cfg: &ClassifyConfig) -> ForgettingClass {
    let n = durations.len();
    let rho = spearman(durations);
    let slope = least_squares_slope(durations);
    let label = if n < cfg.min_cycles {
        ForgettingLabel::Inconclusive
    } else if rho >= cfg.decreasing_rho && slope > 0.0 {
        ForgettingLabel::Decreasing
    } else if rho.abs() < cfg.periodic_abs_rho {
        ForgettingLabel::Periodic
    } else {
        ForgettingLabel::Inconclusive
    };
    ForgettingClass {
        label,
        spearman_rho: rho,
        slope,
        n_cycles: n,
    }
}
