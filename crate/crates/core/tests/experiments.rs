use proptest::prelude::*;

use spacedrl_core::experiments::scripted::ScriptedLearner;
use spacedrl_core::experiments::*;
use spacedrl_core::gridworld::TaskId;
use spacedrl_core::learner::EvalSnapshot;
use spacedrl_core::schedulers::{Method, Outcome};

const U: f64 = 0.8;
const L: f64 = 0.1;

fn evenly(rates: &[f64]) -> Vec<(u64, f64)> {
    rates.iter().enumerate().map(|(i, &r)| (10 * i as u64, r)).collect()
}

fn ph(kind: char, s: u64, e: u64) -> Phase {
    Phase {
        kind: if kind == 'L' { PhaseKind::Learning } else { PhaseKind::Forgetting },
        start_step: s,
        end_step: e,
    }
}

#[test]
fn hand_traced_phase_fixtures() {
    let cases: Vec<(Vec<(u64, f64)>, Vec<Phase>)> = vec![
        (evenly(&[0.0, 0.3, 0.85, 0.9, 0.4, 0.05]), vec![ph('L', 0, 20), ph('F', 20, 50)]),
        (vec![], vec![]),
        (evenly(&[0.0; 4]), vec![]),
        (evenly(&[0.1, 0.5, 0.79, 0.8]), vec![ph('L', 0, 30)]),
        (evenly(&[0.9]), vec![]),
        (evenly(&[0.9, 0.5, 0.1]), vec![ph('F', 0, 20)]),
        (
            evenly(&[0.0, 0.8, 0.1, 0.8, 0.1]),
            vec![ph('L', 0, 10), ph('F', 10, 20), ph('L', 20, 30), ph('F', 30, 40)],
        ),
        (
            evenly(&[0.5, 0.9, 0.95, 0.2, 0.11, 0.1, 0.05, 0.9]),
            vec![ph('L', 0, 10), ph('F', 10, 50), ph('L', 50, 70)],
        ),
        (
            evenly(&[0.0, 0.85, 0.05, 0.02, 0.3, 0.5, 0.85]),
            vec![ph('L', 0, 10), ph('F', 10, 20), ph('L', 20, 60)],
        ),
        (evenly(&[0.5, 0.2, 0.7, 0.15, 0.6]), vec![]),
        (evenly(&[0.0, 0.9, 0.7, 0.5, 0.3, 0.2, 0.15, 0.12]), vec![ph('L', 0, 10)]),
        (evenly(&[1.0, 0.0, 1.0, 0.0]), vec![ph('F', 0, 10), ph('L', 10, 20), ph('F', 20, 30)]),
        (evenly(&[0.0, 0.7999, 0.1]), vec![]),
        (
            evenly(&[0.2, 0.81, 0.09, 0.81, 0.5, 0.09, 0.81]),
            vec![ph('L', 0, 10), ph('F', 10, 20), ph('L', 20, 30), ph('F', 30, 50), ph('L', 50, 60)],
        ),
        (
            vec![(0, 0.0), (7, 0.9), (19, 0.3), (40, 0.0), (41, 0.95)],
            vec![ph('L', 0, 7), ph('F', 7, 40), ph('L', 40, 41)],
        ),
        (
            vec![(5, 0.9), (15, 0.1), (25, 0.9)],
            vec![ph('L', 0, 5), ph('F', 5, 15), ph('L', 15, 25)],
        ),
        (evenly(&[0.05, 0.05, 0.95, 0.95, 0.95, 0.95]), vec![ph('L', 0, 20)]),
        (
            evenly(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]),
            vec![ph('L', 0, 80), ph('F', 80, 150)],
        ),
        (evenly(&[0.85, 0.85, 0.0, 0.0, 0.85]), vec![ph('F', 0, 20), ph('L', 20, 40)]),
        (
            evenly(&[0.3, 1.0, 0.0, 0.5, 1.0, 0.0, 0.5, 1.0, 0.0]),
            vec![
                ph('L', 0, 10),
                ph('F', 10, 20),
                ph('L', 20, 40),
                ph('F', 40, 50),
                ph('L', 50, 70),
                ph('F', 70, 80),
            ],
        ),
    ];
    assert_eq!(cases.len(), 20);
    for (i, (trace, want)) in cases.iter().enumerate() {
        assert_eq!(&detect_phases(trace, U, L), want, "fixture {i}");
    }
}

/// Plain Pearson correlation of ranks, ties averaged.
fn spearman_oracle(ys: &[f64]) -> f64 {
    let n = ys.len();
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&x| {
                let below = v.iter().filter(|&&y| y < x).count() as f64;
                let equal = v.iter().filter(|&&y| y == x).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let (rx, ry) = (rank(&xs), rank(ys));
    let mx = rx.iter().sum::<f64>() / n as f64;
    let my = ry.iter().sum::<f64>() / n as f64;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

#[test]
fn classifier_fixtures() {
    let cfg = ClassifyConfig::default();
    let c = classify_forgetting(&[10.0, 20.0, 30.0], &cfg);
    assert_eq!(c.label, ForgettingLabel::Decreasing);
    assert!((c.spearman_rho - 1.0).abs() < 1e-12);
    assert!((c.slope - 10.0).abs() < 1e-12);
    assert_eq!(classify_forgetting(&[10.0, 10.0, 10.0], &cfg).label, ForgettingLabel::Periodic);
    let c = classify_forgetting(&[5.0, 4.0, 3.0], &cfg);
    assert_eq!(c.label, ForgettingLabel::Inconclusive);
    assert!((c.spearman_rho + 1.0).abs() < 1e-12);
    assert_eq!(classify_forgetting(&[10.0, 20.0], &cfg).label, ForgettingLabel::Inconclusive);
    assert_eq!(classify_forgetting(&[], &cfg).n_cycles, 0);
}

fn phase_trace() -> impl Strategy<Value = Vec<(u64, f64)>> {
    prop::collection::vec((1u64..50, prop_oneof![0.0f64..=1.0, Just(0.0), Just(1.0), Just(U), Just(L)]), 0..80).prop_map(
        |v| {
            let mut step = 0;
            v.into_iter()
                .enumerate()
                .map(|(i, (gap, r))| {
                    if i > 0 {
                        step += gap;
                    }
                    (step, r)
                })
                .collect()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn phases_alternate_and_tile(trace in phase_trace()) {
        let phases = detect_phases(&trace, U, L);
        for w in phases.windows(2) {
            prop_assert_ne!(w[0].kind, w[1].kind);
            prop_assert_eq!(w[0].end_step, w[1].start_step);
        }
        for p in &phases {
            prop_assert!(p.end_step > p.start_step);
        }
        let nl = phases.iter().filter(|p| p.kind == PhaseKind::Learning).count() as i64;
        let nf = phases.len() as i64 - nl;
        prop_assert!((nl - nf).abs() <= 1);
    }

    #[test]
    fn phase_ends_are_threshold_crossings(trace in phase_trace()) {
        for p in detect_phases(&trace, U, L) {
            let r = trace.iter().find(|(s, _)| *s == p.end_step).unwrap().1;
            match p.kind {
                PhaseKind::Learning => prop_assert!(r >= U),
                PhaseKind::Forgetting => prop_assert!(r <= L),
            }
        }
    }

    #[test]
    fn classifier_is_scale_invariant(ds in prop::collection::vec(1.0f64..1e5, 0..12), c in 1e-3f64..1e3) {
        let cfg = ClassifyConfig::default();
        let scaled: Vec<f64> = ds.iter().map(|d| d * c).collect();
        let (a, b) = (classify_forgetting(&ds, &cfg), classify_forgetting(&scaled, &cfg));
        // skip inputs where scaling merges or splits ties through rounding
        let ties = |v: &[f64]| {
            let mut n = 0;
            for i in 0..v.len() {
                for j in 0..i {
                    n += usize::from(v[i] == v[j]);
                }
            }
            n
        };
        prop_assume!(ties(&ds) == ties(&scaled));
        prop_assert_eq!(a.label, b.label);
        prop_assert!((a.spearman_rho - b.spearman_rho).abs() < 1e-12);
    }

    #[test]
    fn spearman_matches_oracle(ys in prop::collection::vec(prop_oneof![0.0f64..10.0, Just(3.0)], 2..15)) {
        prop_assert!((spearman(&ys) - spearman_oracle(&ys)).abs() < 1e-12);
    }
}

fn cfg(upper: f64, max_total_steps: u64) -> AlternationConfig {
    AlternationConfig {
        upper,
        eval_every: 100,
        max_total_steps,
        ..AlternationConfig::default()
    }
}

#[test]
fn scripted_alternation_switches_twice() {
    let c = cfg(0.8, 400);
    let mut l = ScriptedLearner::new(100).with_rates(c.task_a, &[0.0, 0.9, 0.05, 0.9]);
    let r = run_alternation_with(&c, &[c.task_a, c.task_b], &mut l).unwrap();
    assert_eq!(r.switches, vec![100, 200, 300]);
    let kinds: Vec<PhaseKind> = r.phases.iter().map(|p| p.kind).collect();
    assert_eq!(kinds, vec![PhaseKind::Learning, PhaseKind::Forgetting, PhaseKind::Learning]);

    // the 0 -> 0.9 -> 0.05 -> 0.9 fixture with the budget ending at the last rise
    let c = cfg(0.8, 300);
    let mut l = ScriptedLearner::new(100).with_rates(c.task_a, &[0.0, 0.9, 0.05, 0.9]);
    let r = run_alternation_with(&c, &[c.task_a, c.task_b], &mut l).unwrap();
    assert_eq!(r.switches, vec![100, 200]);
    assert_eq!(r.phases.len(), 3);
    assert!(r.warning.is_none());
}

#[test]
fn unreachable_threshold_gives_warning_and_no_phases() {
    let c = cfg(1.1, 1000);
    let mut l = ScriptedLearner::new(100).with_rates(c.task_a, &[1.0]);
    let r = run_alternation_with(&c, &[c.task_a, c.task_b], &mut l).unwrap();
    assert!(r.switches.is_empty());
    assert!(r.phases.is_empty());
    assert_eq!(r.open_phase.kind, PhaseKind::Learning);
    assert!(r.warning.is_some());
    assert!(l.trained().iter().all(|&t| t == c.task_a));
}

#[test]
fn trace_covers_both_tasks_at_every_point() {
    let c = cfg(0.8, 1000);
    let mut l = ScriptedLearner::new(64).with_rates(c.task_a, &[0.0, 0.5, 0.9, 0.2, 0.0]);
    let r = run_alternation_with(&c, &[c.task_a, c.task_b], &mut l).unwrap();
    assert_eq!(r.trace.len() % 2, 0);
    for pair in r.trace.chunks(2) {
        assert_eq!(pair[0].step, pair[1].step);
        assert_eq!((pair[0].eval_task, pair[1].eval_task), (c.task_a, c.task_b));
    }
    assert_eq!(r.trace.last().unwrap().step, 1024);
}

fn mirrored(a_xy: f64, a_yx: f64) -> (CrosstrainResult, CrosstrainResult) {
    let (x, y) = (TaskId::Unlock, TaskId::DoorKey);
    let make = |trained: TaskId, partner: TaskId, level: f64| {
        let c = AlternationConfig {
            task_a: trained,
            eval_every: 100,
            max_total_steps: 500,
            ..AlternationConfig::default()
        };
        let mut l = ScriptedLearner::new(100)
            .with_rates(trained, &[0.0, 0.9, 0.0, 0.9, 0.0, 0.9])
            .with_rates(partner, &[level]);
        run_crosstrain_with(&c, Some(partner), &mut l).unwrap()
    };
    (make(x, y, a_xy), make(y, x, a_yx))
}

#[test]
fn worked_asymmetry_and_antisymmetry() {
    let (xy, yx) = mirrored(0.6, 0.2);
    let a = transfer_asymmetry(&xy, &yx).unwrap();
    assert!((a - 0.4).abs() < 1e-12);
    assert_eq!(transfer_asymmetry(&yx, &xy).unwrap(), -a);

    let (xy, yx) = mirrored(0.0, 0.0);
    assert_eq!(transfer_asymmetry(&xy, &yx).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn asymmetry_is_exactly_antisymmetric(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (xy, yx) = mirrored(a, b);
        let f = transfer_asymmetry(&xy, &yx).unwrap();
        let g = transfer_asymmetry(&yx, &xy).unwrap();
        prop_assert_eq!(f, -g);
        prop_assert!((-1.0..=1.0).contains(&f));
    }
}

#[test]
fn asymmetry_without_learning_phases_is_an_error() {
    let c = AlternationConfig {
        task_a: TaskId::Unlock,
        upper: 1.1,
        eval_every: 100,
        max_total_steps: 300,
        ..AlternationConfig::default()
    };
    let run = |task_a, partner| {
        let c = AlternationConfig { task_a, ..c.clone() };
        run_crosstrain_with(&c, Some(partner), &mut ScriptedLearner::new(100)).unwrap()
    };
    let xy = run(TaskId::Unlock, TaskId::DoorKey);
    let yx = run(TaskId::DoorKey, TaskId::Unlock);
    assert!(transfer_asymmetry(&xy, &yx).is_err());
}

fn run_fixture(method: Method, seed: u64, tasks: &[TaskId], matrix: &[&[f64]]) -> CurriculumResult {
    CurriculumResult {
        method,
        seed,
        tasks: tasks.to_vec(),
        selections: vec![SelectionRecord {
            round: 0,
            selected_task: tasks[0],
            probability: 1.0,
            outcome: Outcome {
                task_id: tasks[0],
                episode_reward: 0.0,
                solved: false,
                value_error: 0.0,
                round: 0,
            },
        }],
        evals: matrix
            .iter()
            .enumerate()
            .map(|(k, row)| EvalRow {
                round: (k as u64 + 1) * 10,
                step: (k as u64 + 1) * 2560,
                evals: row
                    .iter()
                    .zip(tasks)
                    .map(|(&r, &t)| EvalSnapshot {
                        task_id: t,
                        n_episodes: 20,
                        mean_reward: r,
                        solve_rate: r,
                        step_index: (k as u64 + 1) * 2560,
                    })
                    .collect(),
            })
            .collect(),
    }
}

#[test]
fn normalization_matches_spreadsheet_recomputation() {
    let tasks = [TaskId::Empty, TaskId::DoorKey];
    let runs = vec![
        run_fixture(Method::Leitner, 0, &tasks, &[&[0.2, 0.0], &[0.8, 0.1], &[0.6, 0.3]]),
        run_fixture(Method::Leitner, 1, &tasks, &[&[0.4, 0.1], &[0.5, 0.2], &[0.9, 0.2]]),
        run_fixture(Method::Plr, 0, &tasks, &[&[0.1, 0.4], &[0.3, 0.2], &[0.45, 0.0]]),
    ];
    // references: Empty 0.9, DoorKey 0.4
    // run 0: (0.2/0.9+0)/2, (0.8/0.9+0.1/0.4)/2, (0.6/0.9+0.3/0.4)/2
    let r0 = [(0.2 / 0.9) / 2.0, (0.8 / 0.9 + 0.25) / 2.0, (0.6 / 0.9 + 0.75) / 2.0];
    let r1 = [(0.4 / 0.9 + 0.25) / 2.0, (0.5 / 0.9 + 0.5) / 2.0, (1.0 + 0.5) / 2.0];
    let r2 = [(0.1 / 0.9 + 1.0) / 2.0, (0.3 / 0.9 + 0.5) / 2.0, (0.5 + 0.0) / 2.0];
    let n = normalize_results(&runs, true).unwrap();
    assert_eq!(n.reference[0].1, vec![0.9, 0.4]);
    for (score, want) in n.runs.iter().zip([r0, r1, r2]) {
        for (got, w) in score.trace.iter().zip(want) {
            assert!((got - w).abs() < 1e-12);
        }
        let max = want.iter().copied().fold(f64::MIN, f64::max);
        assert!((score.normalized_max - max).abs() < 1e-12);
        assert!((score.normalized_final - want[2]).abs() < 1e-12);
    }
    let leitner = n.methods.iter().find(|m| m.method == Method::Leitner).unwrap();
    assert_eq!(leitner.n_runs, 2);
    let maxes = [r0[2], r1[2]];
    assert!((leitner.normalized_max.median - (maxes[0] + maxes[1]) / 2.0).abs() < 1e-12);
    // type-7 quartiles of two points interpolate a quarter of the way in
    let (lo, hi) = (maxes[0].min(maxes[1]), maxes[0].max(maxes[1]));
    assert!((leitner.normalized_max.q1 - (lo + 0.25 * (hi - lo))).abs() < 1e-12);
    assert!((leitner.normalized_max.q3 - (lo + 0.75 * (hi - lo))).abs() < 1e-12);
    let plr = n.methods.iter().find(|m| m.method == Method::Plr).unwrap();
    assert!((plr.normalized_final.median - r2[2]).abs() < 1e-12);
}

#[test]
fn dominated_method_stays_below_one() {
    let tasks = [TaskId::Empty, TaskId::Unlock];
    let runs = vec![
        run_fixture(Method::Random, 0, &tasks, &[&[0.5, 0.5], &[0.9, 0.8]]),
        run_fixture(Method::Leitner, 0, &tasks, &[&[0.1, 0.2], &[0.3, 0.4]]),
    ];
    let n = normalize_results(&runs, true).unwrap();
    let get = |m| n.runs.iter().find(|r| r.method == m).unwrap();
    assert_eq!(get(Method::Random).normalized_max, 1.0);
    assert!(get(Method::Leitner).normalized_max < 1.0);
    assert!(get(Method::Leitner).trace.iter().all(|&x| x < 1.0));
}

#[test]
fn mismatched_cadence_is_rejected() {
    let tasks = [TaskId::Empty];
    let mut b = run_fixture(Method::Plr, 0, &tasks, &[&[0.1], &[0.2]]);
    b.evals[1].round = 25;
    let runs = vec![run_fixture(Method::Random, 0, &tasks, &[&[0.1], &[0.2]]), b];
    assert!(matches!(normalize_results(&runs, true), Err(ExperimentError::CadenceMismatch(_))));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn normalized_scores_lie_in_unit_interval(
        values in prop::collection::vec(prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 4), 1..6),
    ) {
        let tasks = [TaskId::Empty, TaskId::LavaGap, TaskId::Fetch];
        let runs: Vec<CurriculumResult> = values
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let rows: Vec<&[f64]> = m.iter().map(|r| r.as_slice()).collect();
                run_fixture(Method::ALL[i % 4], i as u64, &tasks, &rows)
            })
            .collect();
        let n = normalize_results(&runs, true).unwrap();
        for r in &n.runs {
            for row in &r.per_task {
                prop_assert!(row.iter().all(|x| (0.0..=1.0).contains(x)));
            }
            prop_assert!((0.0..=1.0).contains(&r.normalized_max));
            prop_assert!((0.0..=1.0).contains(&r.normalized_final));
        }
        for (t, &rf) in n.reference[0].1.iter().enumerate() {
            if rf > 0.0 {
                let best = n.runs.iter().flat_map(|r| r.per_task.iter().map(move |row| row[t])).fold(0.0, f64::max);
                prop_assert_eq!(best, 1.0);
            }
        }
    }
}
