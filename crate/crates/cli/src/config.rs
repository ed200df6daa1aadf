//! JSON run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use spacedrl_core::experiments::{AlternationConfig, ScheduleConfig};
use spacedrl_core::gridworld::TaskId;
use spacedrl_core::learner::TrainConfig;
use spacedrl_core::schedulers::Method;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Forgetting,
    Curriculum,
    Crosstrain,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Forgetting => "forgetting",
            Experiment::Curriculum => "curriculum",
            Experiment::Crosstrain => "crosstrain",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forgetting" => Ok(Experiment::Forgetting),
            "curriculum" => Ok(Experiment::Curriculum),
            "crosstrain" => Ok(Experiment::Crosstrain),
            _ => Err(format!("unknown experiment {s:?}")),
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_mirror() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub alternation: AlternationConfig,
    /// Cross-training: extra task evaluated (never trained) alongside the pair.
    #[serde(default)]
    pub partner: Option<TaskId>,
    /// Cross-training: also run the mirrored pair (partner, task_b) with
    /// task_a as its partner, and report the transfer asymmetry.
    #[serde(default = "default_mirror")]
    pub mirror: bool,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub emit_svg: bool,
    /// Seeds run concurrently; 1 runs them in order.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_jobs() -> usize {
    1
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        cfg.validate().map_err(|msg| CliError::Config {
            path: path.to_path_buf(),
            msg,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.seeds.is_empty() {
            return Err("field `seeds`: must be nonempty".into());
        }
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.seeds.len() {
            return Err("field `seeds`: seeds must be distinct".into());
        }
        if self.jobs == 0 {
            return Err("field `jobs`: must be at least 1".into());
        }
        self.train.validate().map_err(|e| format!("field `train`: {e}"))?;
        match self.experiment {
            Experiment::Forgetting | Experiment::Crosstrain => {
                self.alternation.validate().map_err(|e| format!("field `alternation`: {e}"))?;
            }
            Experiment::Curriculum => {
                self.schedule.validate().map_err(|e| format!("field `schedule`: {e}"))?;
                if self.methods.is_empty() {
                    return Err("field `methods`: must be nonempty".into());
                }
                if self.methods.iter().enumerate().any(|(i, m)| self.methods[..i].contains(m)) {
                    return Err("field `methods`: methods must be distinct".into());
                }
            }
        }
        if self.experiment == Experiment::Crosstrain && self.mirror {
            match self.partner {
                None => return Err("field `partner`: mirrored cross-training needs a partner task".into()),
                Some(p) if p == self.alternation.task_b => {
                    return Err("field `partner`: must differ from alternation.task_b".into())
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Canonical JSON: object keys sorted, no whitespace.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    /// SHA-256 of the canonical JSON; independent of key order in the file.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Seeds as `a..b` (inclusive) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad seed range start {a:?}: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad seed range end {b:?}: {e}"))?;
        if a > b {
            return Err(format!("empty seed range {s}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|e| format!("bad seed {x:?}: {e}")))
        .collect()
}
