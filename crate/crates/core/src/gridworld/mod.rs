//! Procedural gridworld with fifteen task families, egocentric one-hot
//! observations and a breadth-first solvability oracle.

mod cell;
mod dump;
mod observation;
mod solver;
mod tasks;
mod world;

use thiserror::Error;

pub use cell::{Action, Cell, Color, Dir, DoorState, Kind, Object, Pos};
pub use dump::WorldDump;
pub use observation::{encode_observation, Observation, ACTIVE, CARRY_CHANNELS, CELL_CHANNELS, OBS_DIM, VIEW};
pub use solver::{shortest_plan, solvable, STATE_LIMIT};
pub use tasks::{make_task, parse_task_list, TaskId, TaskSpec};
pub use world::{success_reward, GridWorld, Mission, StepResult, SuccessKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("unknown task id {0:?}")]
    UnknownTask(String),
    #[error("could not generate a solvable {task} instance for seed {seed} after {attempts} attempts")]
    GenerationFailed { task: TaskId, seed: u64, attempts: u64 },
    #[error("step called after the episode ended")]
    EpisodeOver,
    #[error("solvability oracle overflow: {0}")]
    OracleOverflow(String),
    #[error("invalid world: {0}")]
    InvalidWorld(String),
}
