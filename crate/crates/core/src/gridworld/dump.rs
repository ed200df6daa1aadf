//! Human-readable JSON dump of a world, also used to load test fixtures.
//!
//! Each row is a space-separated list of three-character cell tokens
//! (kind, color, door state), e.g. `"W.. ... Drc G.."`.

use serde::{Deserialize, Serialize};

use super::cell::{Cell, Dir, Object, Pos};
use super::tasks::TaskId;
use super::world::{GridWorld, Mission};
use super::EnvError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldDump {
    pub task: TaskId,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub rows: Vec<String>,
    pub agent_pos: Pos,
    pub agent_dir: Dir,
    pub carrying: Option<Object>,
    pub step_count: u32,
    pub max_steps: u32,
    pub mission: Mission,
    #[serde(default)]
    pub dynamic_obstacles: bool,
}

impl GridWorld {
    pub fn to_dump(&self) -> WorldDump {
        let rows = (0..self.height as i32)
            .map(|y| {
                (0..self.width as i32)
                    .map(|x| self.cell(Pos::new(x, y)).to_token())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        WorldDump {
            task: self.task,
            seed: self.seed,
            width: self.width,
            height: self.height,
            rows,
            agent_pos: self.agent_pos,
            agent_dir: self.agent_dir,
            carrying: self.carrying,
            step_count: self.step_count,
            max_steps: self.max_steps,
            mission: self.mission.clone(),
            dynamic_obstacles: self.dynamic_obstacles,
        }
    }

    pub fn to_debug_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_dump()).expect("dump serializes")
    }

    pub fn from_dump(dump: &WorldDump) -> Result<GridWorld, EnvError> {
        if dump.rows.len() != dump.height {
            return Err(EnvError::InvalidWorld(format!(
                "expected {} rows, found {}",
                dump.height,
                dump.rows.len()
            )));
        }
        let mut cells = Vec::with_capacity(dump.width * dump.height);
        for (y, row) in dump.rows.iter().enumerate() {
            let tokens: Vec<&str> = row.split_whitespace().collect();
            if tokens.len() != dump.width {
                return Err(EnvError::InvalidWorld(format!("row {y} has {} cells", tokens.len())));
            }
            for t in tokens {
                cells.push(
                    Cell::from_token(t).ok_or_else(|| EnvError::InvalidWorld(format!("bad token {t:?} in row {y}")))?,
                );
            }
        }
        let world = GridWorld {
            task: dump.task,
            seed: dump.seed,
            width: dump.width,
            height: dump.height,
            cells,
            agent_pos: dump.agent_pos,
            agent_dir: dump.agent_dir,
            carrying: dump.carrying,
            step_count: dump.step_count,
            max_steps: dump.max_steps,
            mission: dump.mission.clone(),
            dynamic_obstacles: dump.dynamic_obstacles,
            finished: false,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn from_debug_json(json: &str) -> Result<GridWorld, EnvError> {
        let dump: WorldDump = serde_json::from_str(json).map_err(|e| EnvError::InvalidWorld(e.to_string()))?;
        GridWorld::from_dump(&dump)
    }
}

#[cfg(test)]
mod tests {
    use crate::gridworld::tasks::{make_task, TaskId};
    use crate::gridworld::world::GridWorld;

    #[test]
    fn dump_round_trips_generated_worlds() {
        for t in TaskId::ALL {
            let w = make_task(t, 11).unwrap();
            let json = w.to_debug_json();
            assert_eq!(GridWorld::from_debug_json(&json).unwrap(), w);
        }
    }

    #[test]
    fn rows_are_readable() {
        let w = make_task(TaskId::Empty, 0).unwrap();
        let dump = w.to_dump();
        assert_eq!(dump.rows[0], "W.. W.. W.. W.. W.. W..");
        assert_eq!(dump.rows[4], "W.. ... ... ... G.. W..");
    }
}
