//! Results store: CSV tables, JSON documents and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use spacedrl_core::experiments::{EvalPoint, PhaseRecord, SelectionRecord};
use spacedrl_core::schedulers::Method;

use crate::CliError;

pub const EVAL_TRACE_HEADER: [&str; 7] = [
    "run_id",
    "seed",
    "step",
    "trained_task",
    "eval_task",
    "solve_rate",
    "mean_reward",
];
pub const PHASES_HEADER: [&str; 8] = [
    "run_id",
    "seed",
    "phase_idx",
    "kind",
    "trained_task",
    "monitored_task",
    "start_step",
    "end_step",
];
pub const SELECTIONS_HEADER: [&str; 9] = [
    "run_id",
    "seed",
    "round",
    "method",
    "selected_task",
    "episode_reward",
    "solved",
    "value_error",
    "probability_of_selected",
];

/// `%.9g`: 9 significant digits, trailing zeros dropped, exponent form
/// outside [1e-4, 1e9). Independent of locale.
pub fn fmt_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    Ok(w)
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_eval_trace(path: &Path, run_id: &str, seed: u64, trace: &[EvalPoint]) -> Result<(), CliError> {
    let mut w = writer(path, &EVAL_TRACE_HEADER)?;
    for p in trace {
        w.write_record([
            run_id.to_string(),
            seed.to_string(),
            p.step.to_string(),
            p.trained_task.to_string(),
            p.eval_task.to_string(),
            fmt_g9(p.solve_rate),
            fmt_g9(p.mean_reward),
        ])
        .map_err(|e| CliError::csv(path, e))?;
    }
    finish(w, path)
}

pub fn write_phases(path: &Path, run_id: &str, seed: u64, phases: &[PhaseRecord]) -> Result<(), CliError> {
    let mut w = writer(path, &PHASES_HEADER)?;
    for (i, p) in phases.iter().enumerate() {
        w.write_record([
            run_id.to_string(),
            seed.to_string(),
            i.to_string(),
            p.kind.to_string(),
            p.trained_task.to_string(),
            p.monitored_task.to_string(),
            p.start_step.to_string(),
            p.end_step.to_string(),
        ])
        .map_err(|e| CliError::csv(path, e))?;
    }
    finish(w, path)
}

pub fn write_selections(
    path: &Path,
    run_id: &str,
    seed: u64,
    method: Method,
    selections: &[SelectionRecord],
) -> Result<(), CliError> {
    let mut w = writer(path, &SELECTIONS_HEADER)?;
    for s in selections {
        w.write_record([
            run_id.to_string(),
            seed.to_string(),
            s.round.to_string(),
            method.to_string(),
            s.selected_task.to_string(),
            fmt_g9(s.outcome.episode_reward),
            s.outcome.solved.to_string(),
            fmt_g9(s.outcome.value_error),
            fmt_g9(s.probability),
        ])
        .map_err(|e| CliError::csv(path, e))?;
    }
    finish(w, path)
}

/// Replaces non-finite floats (which JSON cannot hold) and rounds finite
/// ones through `fmt_g9`, so JSON output uses the same precision as CSVs.
pub fn round_floats(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r: f64 = fmt_g9(x).parse().expect("formatted float parses");
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let v = round_floats(serde_json::to_value(value).expect("serializable"));
    let mut text = serde_json::to_string_pretty(&v).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes via a temporary file in the same directory and renames it into
/// place, so readers never observe a partial file.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
        let v = round_floats(serde_json::to_value(value).expect("serializable"));
        let mut text = serde_json::to_string_pretty(&v).expect("value serializes");
        text.push('\n');
        f.write_all(text.as_bytes()).map_err(|e| CliError::io(&tmp, e))?;
        f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub run_id: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config_hash: String,
    pub created: String,
    pub runs: Vec<RunEntry>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Results {
            path,
            msg: e.to_string(),
        })
    }
}

/// Every regular file under `root` except the manifest itself, sorted by
/// relative path.
pub fn inventory(root: &Path) -> Result<Vec<FileEntry>, CliError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
        for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
            let path = entry.map_err(|e| CliError::io(dir, e))?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(root, &mut files)?;
    let mut out: Vec<FileEntry> = files
        .into_iter()
        .filter_map(|p| {
            let rel = p.strip_prefix(root).ok()?.to_string_lossy().replace('\\', "/");
            (rel != "manifest.json" && !rel.ends_with(".tmp")).then_some((p, rel))
        })
        .map(|(p, rel)| {
            let bytes = fs::read(&p).map_err(|e| CliError::io(&p, e))?;
            Ok(FileEntry {
                path: rel,
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        })
        .collect::<Result<_, CliError>>()?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}
