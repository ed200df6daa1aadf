//! `report` subcommand: aggregates one or more results directories.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use spacedrl_core::experiments::{
    normalize_results, CurriculumResult, EvalRow, ExperimentError, ForgettingLabel, NormalizedResults,
    SelectionRecord, Spread,
};
use spacedrl_core::gridworld::TaskId;
use spacedrl_core::learner::EvalSnapshot;
use spacedrl_core::schedulers::{Method, Outcome};

use crate::config::{Experiment, RunConfig};
use crate::run::{tally, AlternationSummary, Summary};
use crate::store::{fmt_g9, RunManifest, RunStatus};
use crate::CliError;

pub const REPORT_HEADER: [&str; 8] = ["table", "method", "task", "statistic", "n", "median", "q1", "q3"];

/// One row of report.csv. Count-only rows leave the spread empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub table: String,
    pub method: String,
    pub task: String,
    pub statistic: String,
    pub n: usize,
    pub spread: Option<Spread>,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub normalized: Option<NormalizedResults>,
    pub alternation: Vec<AlternationSummary>,
    pub asymmetries: Vec<f64>,
    pub tally: BTreeMap<String, usize>,
}

impl Report {
    /// The forgetting-class tally as `label,count` pairs in label order.
    pub fn tally_line(&self) -> String {
        ForgettingLabel::ALL
            .iter()
            .map(|l| format!("{},{}", l.as_str(), self.tally.get(l.as_str()).copied().unwrap_or(0)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    run_id: String,
    seed: u64,
    step: u64,
    #[allow(dead_code)]
    trained_task: TaskId,
    eval_task: TaskId,
    solve_rate: f64,
    mean_reward: f64,
}

#[derive(Debug, Deserialize)]
struct SelectionRow {
    run_id: String,
    seed: u64,
    round: u64,
    method: Method,
    selected_task: TaskId,
    episode_reward: f64,
    solved: bool,
    value_error: f64,
    probability_of_selected: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    r.deserialize().map(|x| x.map_err(|e| CliError::csv(path, e))).collect()
}

fn malformed(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Results {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Rebuilds a curriculum run from its CSV files.
fn load_curriculum(dir: &Path, cfg: &RunConfig, run_id: &str, method: Method, seed: u64) -> Result<CurriculumResult, CliError> {
    let run_dir = dir.join("runs").join(run_id);
    let trace_path = run_dir.join("eval_trace.csv");
    let trace: Vec<TraceRow> = read_rows(&trace_path)?;
    let mut evals: Vec<EvalRow> = Vec::new();
    for row in trace {
        if row.run_id != run_id || row.seed != seed {
            return Err(malformed(&trace_path, format!("row belongs to {} seed {}", row.run_id, row.seed)));
        }
        if evals.last().is_none_or(|e| e.step != row.step) {
            evals.push(EvalRow {
                round: (evals.len() as u64 + 1) * cfg.schedule.eval_every_rounds,
                step: row.step,
                evals: Vec::new(),
            });
        }
        evals.last_mut().expect("row just pushed").evals.push(EvalSnapshot {
            task_id: row.eval_task,
            n_episodes: cfg.schedule.eval_episodes,
            mean_reward: row.mean_reward,
            solve_rate: row.solve_rate,
            step_index: row.step,
        });
    }
    let sel_path = run_dir.join("selections.csv");
    let selections = read_rows::<SelectionRow>(&sel_path)?
        .into_iter()
        .map(|s| {
            if s.run_id != run_id || s.seed != seed || s.method != method {
                return Err(malformed(&sel_path, format!("row belongs to {} ({})", s.run_id, s.method)));
            }
            Ok(SelectionRecord {
                round: s.round,
                selected_task: s.selected_task,
                probability: s.probability_of_selected,
                outcome: Outcome {
                    task_id: s.selected_task,
                    episode_reward: s.episode_reward,
                    solved: s.solved,
                    value_error: s.value_error,
                    round: s.round,
                },
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut tasks = cfg.schedule.tasks.clone();
    tasks.sort();
    Ok(CurriculumResult {
        method,
        seed,
        tasks,
        selections,
        evals,
    })
}

fn load_summary(dir: &Path) -> Result<Summary, CliError> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| malformed(&path, e.to_string()))
}

fn spread_row(table: &str, method: &str, task: &str, statistic: &str, values: &[f64]) -> ReportRow {
    ReportRow {
        table: table.into(),
        method: method.into(),
        task: task.into(),
        statistic: statistic.into(),
        n: values.len(),
        spread: (!values.is_empty()).then(|| Spread::of(values)),
    }
}

/// Reads every directory and computes the aggregate tables without
/// writing anything.
pub fn build_report(dirs: &[PathBuf]) -> Result<Report, CliError> {
    if dirs.is_empty() {
        return Err(CliError::Usage("report needs at least one results directory".into()));
    }
    let mut curricula: Vec<CurriculumResult> = Vec::new();
    let mut report = Report::default();
    for dir in dirs {
        let manifest = RunManifest::load(dir)?;
        let cfg_path = dir.join("config.json");
        let cfg = RunConfig::load(&cfg_path)?;
        if manifest.config_hash != cfg.hash() {
            return Err(malformed(&cfg_path, "config hash does not match manifest"));
        }
        match cfg.experiment {
            Experiment::Curriculum => {
                for run in manifest.runs.iter().filter(|r| r.status == RunStatus::Completed) {
                    let method = run
                        .method
                        .ok_or_else(|| malformed(&dir.join("manifest.json"), format!("{} has no method", run.run_id)))?;
                    curricula.push(load_curriculum(dir, &cfg, &run.run_id, method, run.seed)?);
                }
            }
            Experiment::Forgetting | Experiment::Crosstrain => match load_summary(dir)? {
                Summary::Forgetting { runs, .. } => report.alternation.extend(runs),
                Summary::Crosstrain { seeds, .. } => {
                    for s in seeds {
                        report.alternation.extend(s.runs);
                        report.asymmetries.extend(s.asymmetry);
                    }
                }
                Summary::Curriculum { .. } => {
                    return Err(malformed(&dir.join("summary.json"), "curriculum summary in an alternation run"))
                }
            },
        }
    }

    if !curricula.is_empty() {
        let n = normalize_results(&curricula, true).map_err(|e| match e {
            ExperimentError::CadenceMismatch(m) => CliError::Incompatible(m),
            other => other.into(),
        })?;
        for m in &n.methods {
            let own: Vec<_> = n.runs.iter().filter(|r| r.method == m.method).collect();
            let maxes: Vec<f64> = own.iter().map(|r| r.normalized_max).collect();
            let finals: Vec<f64> = own.iter().map(|r| r.normalized_final).collect();
            report.rows.push(spread_row("method", m.method.as_str(), "", "normalized_max", &maxes));
            report.rows.push(spread_row("method", m.method.as_str(), "", "normalized_final", &finals));
        }
        for m in &n.methods {
            let runs: Vec<&CurriculumResult> = curricula.iter().filter(|r| r.method == m.method).collect();
            for (i, t) in n.tasks.iter().enumerate() {
                let finals: Vec<f64> = runs
                    .iter()
                    .map(|r| r.evals.last().expect("cadence checked").evals[i].mean_reward)
                    .collect();
                report
                    .rows
                    .push(spread_row("task", m.method.as_str(), t.as_str(), "final_mean_reward", &finals));
            }
        }
        report.normalized = Some(n);
    }

    if !report.alternation.is_empty() {
        report.tally = tally(report.alternation.iter().map(|r| r.label));
        for l in ForgettingLabel::ALL {
            report.rows.push(ReportRow {
                table: "forgetting".into(),
                method: String::new(),
                task: String::new(),
                statistic: l.as_str().into(),
                n: report.tally[l.as_str()],
                spread: None,
            });
        }
        let cycles: Vec<f64> = report.alternation.iter().map(|r| r.completed_cycles as f64).collect();
        report.rows.push(spread_row("forgetting", "", "", "completed_cycles", &cycles));
        if !report.asymmetries.is_empty() {
            let a = report.asymmetries.clone();
            report.rows.push(spread_row("crosstrain", "", "", "transfer_asymmetry", &a));
        }
    }
    if report.rows.is_empty() {
        return Err(CliError::Usage("no completed runs found in the given directories".into()));
    }
    Ok(report)
}

fn render_csv(report: &Report, path: &Path) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    w.write_record(REPORT_HEADER).map_err(|e| CliError::csv(path, e))?;
    for r in &report.rows {
        let (m, q1, q3) = match r.spread {
            Some(s) => (fmt_g9(s.median), fmt_g9(s.q1), fmt_g9(s.q3)),
            None => Default::default(),
        };
        w.write_record([
            r.table.clone(),
            r.method.clone(),
            r.task.clone(),
            r.statistic.clone(),
            r.n.to_string(),
            m,
            q1,
            q3,
        ])
        .map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn render_md(report: &Report) -> String {
    let mut s = String::from("# Results report\n");
    let spread_cells = |r: &ReportRow| match r.spread {
        Some(sp) => format!("{} | {} | {}", fmt_g9(sp.median), fmt_g9(sp.q1), fmt_g9(sp.q3)),
        None => " |  | ".into(),
    };
    let methods: Vec<&ReportRow> = report.rows.iter().filter(|r| r.table == "method").collect();
    if !methods.is_empty() {
        s.push_str("\n## Normalized reward per method\n\n");
        s.push_str("| method | statistic | n | median | q1 | q3 |\n|---|---|---|---|---|---|\n");
        for r in methods {
            let _ = writeln!(s, "| {} | {} | {} | {} |", r.method, r.statistic, r.n, spread_cells(r));
        }
    }
    let tasks: Vec<&ReportRow> = report.rows.iter().filter(|r| r.table == "task").collect();
    if !tasks.is_empty() {
        s.push_str("\n## Final mean evaluation reward per task\n\n");
        s.push_str("| method | task | n | median | q1 | q3 |\n|---|---|---|---|---|---|\n");
        for r in tasks {
            let _ = writeln!(s, "| {} | {} | {} | {} |", r.method, r.task, r.n, spread_cells(r));
        }
    }
    if !report.alternation.is_empty() {
        s.push_str("\n## Forgetting classes\n\n");
        let _ = writeln!(s, "Tally: {}\n", report.tally_line());
        s.push_str("| run | seed | cycles | label | spearman rho | slope |\n|---|---|---|---|---|---|\n");
        for r in &report.alternation {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} |",
                r.run_id,
                r.seed,
                r.completed_cycles,
                r.label,
                fmt_g9(r.spearman_rho),
                fmt_g9(r.slope)
            );
        }
        for r in report.rows.iter().filter(|r| r.table == "crosstrain") {
            let _ = writeln!(s, "\nTransfer asymmetry over {} seeds: median {}", r.n, spread_cells(r));
        }
    }
    s
}

/// Writes report.csv and report.md into `out`. Input directories are only
/// read.
pub fn cmd_report(dirs: &[PathBuf], out: &Path) -> Result<Report, CliError> {
    let report = build_report(dirs)?;
    if let Ok(o) = out.canonicalize() {
        if dirs.iter().any(|d| d.canonicalize().is_ok_and(|d| d == o)) {
            return Err(CliError::Usage("report output must not be one of the input directories".into()));
        }
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    render_csv(&report, &out.join("report.csv"))?;
    let md = out.join("report.md");
    fs::write(&md, render_md(&report)).map_err(|e| CliError::io(&md, e))?;
    Ok(report)
}
