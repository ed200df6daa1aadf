//! `run` subcommand: executes a harness for every seed and writes the
//! results store.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use spacedrl_core::experiments::{
    normalize_results, run_crosstrain, run_curriculum, run_forgetting_alternation, solve_rate_series,
    transfer_asymmetry, AlternationConfig, AlternationResult, AucEntry, CrosstrainResult, CurriculumResult, EvalPoint,
    ExperimentError, ForgettingLabel, MethodStats,
};
use spacedrl_core::gridworld::TaskId;
use spacedrl_core::schedulers::Method;

use crate::config::{Experiment, RunConfig};
use crate::store::{self, RunEntry, RunManifest, RunStatus};
use crate::svg::{emit_svg, Series};
use crate::CliError;

pub const TOOL: &str = "spacedrl";

#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub experiment: Option<Experiment>,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub svg: bool,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn all_completed(&self) -> bool {
        self.manifest.runs.iter().all(|r| r.status == RunStatus::Completed)
    }
}

/// Alternation run as recorded in summary.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternationSummary {
    pub run_id: String,
    pub seed: u64,
    pub task_a: TaskId,
    pub task_b: TaskId,
    pub completed_cycles: usize,
    pub switches: Vec<u64>,
    pub forgetting_durations: Vec<f64>,
    pub label: ForgettingLabel,
    pub spearman_rho: f64,
    pub slope: f64,
    pub warning: Option<String>,
}

impl AlternationSummary {
    fn new(run_id: &str, seed: u64, r: &AlternationResult) -> Self {
        Self {
            run_id: run_id.to_string(),
            seed,
            task_a: r.task_a,
            task_b: r.task_b,
            completed_cycles: r.completed_cycles(),
            switches: r.switches.clone(),
            forgetting_durations: r.forgetting_durations(),
            label: r.classification.label,
            spearman_rho: r.classification.spearman_rho,
            slope: r.classification.slope,
            warning: r.warning.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstrainSummary {
    pub seed: u64,
    pub runs: Vec<AlternationSummary>,
    pub auc: Vec<Vec<AucEntry>>,
    /// A(partner | task_a) − A(task_a | partner), when mirrored.
    pub asymmetry: Option<f64>,
    pub asymmetry_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumRunSummary {
    pub run_id: String,
    pub method: Method,
    pub seed: u64,
    pub normalized_max: f64,
    pub normalized_final: f64,
    pub selection_counts: BTreeMap<TaskId, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum Summary {
    Forgetting {
        runs: Vec<AlternationSummary>,
        tally: BTreeMap<String, usize>,
    },
    Crosstrain {
        seeds: Vec<CrosstrainSummary>,
        tally: BTreeMap<String, usize>,
    },
    Curriculum {
        runs: Vec<CurriculumRunSummary>,
        methods: Vec<MethodStats>,
        reference: Vec<(TaskId, f64)>,
        normalize_error: Option<String>,
    },
}

pub fn tally(labels: impl IntoIterator<Item = ForgettingLabel>) -> BTreeMap<String, usize> {
    let mut t: BTreeMap<String, usize> = ForgettingLabel::ALL.iter().map(|l| (l.to_string(), 0)).collect();
    for l in labels {
        *t.get_mut(l.as_str()).expect("known label") += 1;
    }
    t
}

/// What one job produced, before aggregation.
enum JobOutput {
    Alternation(AlternationSummary),
    Crosstrain(CrosstrainSummary),
    Curriculum(Box<CurriculumResult>),
}

struct Job {
    seed: u64,
    method: Option<Method>,
    run_ids: Vec<String>,
}

fn run_dir(root: &Path, run_id: &str) -> PathBuf {
    root.join("runs").join(run_id)
}

fn trace_svg(trace: &[EvalPoint], title: &str) -> String {
    let mut tasks: Vec<TaskId> = trace.iter().map(|p| p.eval_task).collect();
    tasks.sort();
    tasks.dedup();
    let series: Vec<Series> = tasks
        .iter()
        .map(|&t| Series {
            label: format!("{t} solve rate"),
            points: solve_rate_series(trace, t).into_iter().map(|(s, r)| (s as f64, r)).collect(),
        })
        .collect();
    emit_svg(&series, title)
}

fn write_alternation(root: &Path, run_id: &str, seed: u64, r: &AlternationResult, svg: bool) -> Result<(), CliError> {
    let dir = run_dir(root, run_id);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    store::write_eval_trace(&dir.join("eval_trace.csv"), run_id, seed, &r.trace)?;
    store::write_phases(&dir.join("phases.csv"), run_id, seed, &r.phases)?;
    if svg {
        let p = dir.join("eval_trace.svg");
        fs::write(&p, trace_svg(&r.trace, run_id)).map_err(|e| CliError::io(&p, e))?;
    }
    Ok(())
}

fn write_curriculum(root: &Path, run_id: &str, r: &CurriculumResult, svg: bool) -> Result<(), CliError> {
    let dir = run_dir(root, run_id);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let trace = curriculum_trace(r);
    store::write_eval_trace(&dir.join("eval_trace.csv"), run_id, r.seed, &trace)?;
    store::write_selections(&dir.join("selections.csv"), run_id, r.seed, r.method, &r.selections)?;
    if svg {
        let p = dir.join("eval_trace.svg");
        fs::write(&p, trace_svg(&trace, run_id)).map_err(|e| CliError::io(&p, e))?;
    }
    Ok(())
}

/// Eval matrix flattened to trace rows; `trained_task` is the task of the
/// round just before each evaluation.
pub fn curriculum_trace(r: &CurriculumResult) -> Vec<EvalPoint> {
    let mut out = Vec::new();
    for row in &r.evals {
        let trained = r.selections[row.round as usize - 1].selected_task;
        out.extend(row.evals.iter().map(|s| EvalPoint {
            step: row.step,
            trained_task: trained,
            eval_task: s.task_id,
            solve_rate: s.solve_rate,
            mean_reward: s.mean_reward,
        }));
    }
    out
}

fn execute(cfg: &RunConfig, root: &Path, svg: bool, job: &Job) -> Result<JobOutput, CliError> {
    match cfg.experiment {
        Experiment::Forgetting => {
            let r = run_forgetting_alternation(&cfg.alternation, &cfg.train, job.seed)?;
            write_alternation(root, &job.run_ids[0], job.seed, &r, svg)?;
            Ok(JobOutput::Alternation(AlternationSummary::new(&job.run_ids[0], job.seed, &r)))
        }
        Experiment::Crosstrain => {
            let primary = run_crosstrain(&cfg.alternation, cfg.partner, &cfg.train, job.seed)?;
            let mut results: Vec<CrosstrainResult> = vec![primary];
            if cfg.mirror {
                let partner = cfg.partner.expect("validated: mirror needs partner");
                let mirror_cfg = AlternationConfig {
                    task_a: partner,
                    ..cfg.alternation.clone()
                };
                results.push(run_crosstrain(&mirror_cfg, Some(cfg.alternation.task_a), &cfg.train, job.seed)?);
            }
            for (r, id) in results.iter().zip(&job.run_ids) {
                write_alternation(root, id, job.seed, &r.alternation, svg)?;
            }
            let (asymmetry, asymmetry_error) = match results.as_slice() {
                [xy, yx] => match transfer_asymmetry(xy, yx) {
                    Ok(a) => (Some(a), None),
                    Err(e) => (None, Some(e.to_string())),
                },
                _ => (None, None),
            };
            Ok(JobOutput::Crosstrain(CrosstrainSummary {
                seed: job.seed,
                runs: results
                    .iter()
                    .zip(&job.run_ids)
                    .map(|(r, id)| AlternationSummary::new(id, job.seed, &r.alternation))
                    .collect(),
                auc: results.iter().map(|r| r.auc.clone()).collect(),
                asymmetry,
                asymmetry_error,
            }))
        }
        Experiment::Curriculum => {
            let method = job.method.expect("curriculum jobs carry a method");
            let r = run_curriculum(method, &cfg.schedule, &cfg.train, job.seed)?;
            write_curriculum(root, &job.run_ids[0], &r, svg)?;
            Ok(JobOutput::Curriculum(Box::new(r)))
        }
    }
}

fn plan(cfg: &RunConfig) -> Vec<Job> {
    let mut jobs = Vec::new();
    match cfg.experiment {
        Experiment::Forgetting => {
            for &seed in &cfg.seeds {
                jobs.push(Job {
                    seed,
                    method: None,
                    run_ids: vec![format!("forgetting-s{seed}")],
                });
            }
        }
        Experiment::Crosstrain => {
            for &seed in &cfg.seeds {
                let mut run_ids = vec![format!("crosstrain-{}-s{seed}", cfg.alternation.task_a)];
                if cfg.mirror {
                    run_ids.push(format!("crosstrain-{}-s{seed}", cfg.partner.expect("validated")));
                }
                jobs.push(Job {
                    seed,
                    method: None,
                    run_ids,
                });
            }
        }
        Experiment::Curriculum => {
            for &method in &cfg.methods {
                for &seed in &cfg.seeds {
                    jobs.push(Job {
                        seed,
                        method: Some(method),
                        run_ids: vec![format!("curriculum-{method}-s{seed}")],
                    });
                }
            }
        }
    }
    jobs
}

/// Runs jobs on up to `workers` threads; results come back in job order.
fn run_jobs(
    cfg: &RunConfig,
    root: &Path,
    svg: bool,
    jobs: &[Job],
    workers: usize,
) -> Vec<Result<JobOutput, CliError>> {
    if workers <= 1 {
        return jobs.iter().map(|j| execute(cfg, root, svg, j)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<JobOutput, CliError>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers.min(jobs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = execute(cfg, root, svg, job);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every job ran"))
        .collect()
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    if dir.exists() {
        let nonempty = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?.next().is_some();
        if nonempty && !dir.join("manifest.json").exists() {
            return Err(CliError::Usage(format!(
                "output directory {} is not empty and holds no previous run; refusing to write into it",
                dir.display()
            )));
        }
        // A previous run of this tool: clear its outputs.
        for name in ["runs", "summary.json", "config.json", "manifest.json"] {
            let p = dir.join(name);
            if p.is_dir() {
                fs::remove_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
            } else if p.exists() {
                fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
            }
        }
    }
    fs::create_dir_all(dir.join("runs")).map_err(|e| CliError::io(dir, e))
}

fn summarize(cfg: &RunConfig, outputs: &[(usize, JobOutput)]) -> Summary {
    match cfg.experiment {
        Experiment::Forgetting => {
            let runs: Vec<AlternationSummary> = outputs
                .iter()
                .filter_map(|(_, o)| match o {
                    JobOutput::Alternation(s) => Some(s.clone()),
                    _ => None,
                })
                .collect();
            Summary::Forgetting {
                tally: tally(runs.iter().map(|r| r.label)),
                runs,
            }
        }
        Experiment::Crosstrain => {
            let seeds: Vec<CrosstrainSummary> = outputs
                .iter()
                .filter_map(|(_, o)| match o {
                    JobOutput::Crosstrain(s) => Some(s.clone()),
                    _ => None,
                })
                .collect();
            Summary::Crosstrain {
                tally: tally(seeds.iter().flat_map(|s| s.runs.iter().map(|r| r.label))),
                seeds,
            }
        }
        Experiment::Curriculum => {
            let results: Vec<CurriculumResult> = outputs
                .iter()
                .filter_map(|(_, o)| match o {
                    JobOutput::Curriculum(r) => Some((**r).clone()),
                    _ => None,
                })
                .collect();
            match normalize_results(&results, true) {
                Ok(n) => Summary::Curriculum {
                    runs: results
                        .iter()
                        .zip(&n.runs)
                        .map(|(r, s)| CurriculumRunSummary {
                            run_id: format!("curriculum-{}-s{}", r.method, r.seed),
                            method: r.method,
                            seed: r.seed,
                            normalized_max: s.normalized_max,
                            normalized_final: s.normalized_final,
                            selection_counts: r.selection_counts().into_iter().collect(),
                        })
                        .collect(),
                    methods: n.methods,
                    reference: n.tasks.iter().copied().zip(n.reference[0].1.iter().copied()).collect(),
                    normalize_error: None,
                },
                Err(e) => Summary::Curriculum {
                    runs: vec![],
                    methods: vec![],
                    reference: vec![],
                    normalize_error: Some(match e {
                        ExperimentError::CadenceMismatch(m) => m,
                        other => other.to_string(),
                    }),
                },
            }
        }
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<RunOutcome, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(e) = args.experiment {
        if e != cfg.experiment {
            return Err(CliError::Usage(format!(
                "config {} describes a {} experiment, not {e}",
                args.config.display(),
                cfg.experiment
            )));
        }
    }
    if let Some(seeds) = &args.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    cfg.emit_svg |= args.svg;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set output_dir".into()))?;
    cfg.output_dir = None;
    cfg.validate().map_err(|msg| CliError::Config {
        path: args.config.clone(),
        msg,
    })?;

    prepare_out_dir(&out_dir)?;
    let cfg_path = out_dir.join("config.json");
    let mut cfg_text = serde_json::to_string_pretty(&cfg).expect("config serializes");
    cfg_text.push('\n');
    fs::write(&cfg_path, cfg_text).map_err(|e| CliError::io(&cfg_path, e))?;

    let jobs = plan(&cfg);
    let results = run_jobs(&cfg, &out_dir, cfg.emit_svg, &jobs, cfg.jobs);

    let mut entries = Vec::new();
    let mut outputs = Vec::new();
    for (i, (job, res)) in jobs.iter().zip(results).enumerate() {
        let (status, error) = match res {
            Ok(o) => {
                outputs.push((i, o));
                (RunStatus::Completed, None)
            }
            Err(e) => (RunStatus::Failed, Some(e.to_string())),
        };
        for id in &job.run_ids {
            entries.push(RunEntry {
                run_id: id.clone(),
                seed: job.seed,
                method: job.method,
                status: status.clone(),
                error: error.clone(),
            });
        }
    }

    store::write_json(&out_dir.join("summary.json"), &summarize(&cfg, &outputs))?;
    let manifest = RunManifest {
        tool: TOOL.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.experiment.to_string(),
        config_hash: cfg.hash(),
        created: chrono::Utc::now().to_rfc3339(),
        runs: entries,
        files: store::inventory(&out_dir)?,
    };
    store::write_json_atomic(&out_dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { out_dir, manifest })
}
