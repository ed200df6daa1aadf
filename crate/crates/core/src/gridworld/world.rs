use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cell::{Action, Cell, Dir, DoorState, Kind, Object, Pos};
use super::observation::{encode_observation, Observation};
use super::tasks::TaskId;
use super::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessKind {
    ReachGoal,
    ReachTargetCell,
    PickupTarget,
    AdjacentToTarget,
}

/// Task-specific success descriptor. The observation has no mission channel,
/// so every field here is fixed per task family except positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mission {
    pub success: SuccessKind,
    /// Cell to enter (`ReachTargetCell`).
    pub target_cell: Option<Pos>,
    /// Object to pick up, face, or place something next to.
    pub target_object: Option<Object>,
    /// Object to carry and drop next to `target_object` (put-near variant).
    pub carry_object: Option<Object>,
    /// Door that must already be open when the target door is opened.
    pub prerequisite_door: Option<Pos>,
    /// Picking up anything other than the named object ends the episode.
    pub strict_pickup: bool,
}

impl Mission {
    pub fn reach_goal() -> Self {
        Self {
            success: SuccessKind::ReachGoal,
            target_cell: None,
            target_object: None,
            carry_object: None,
            prerequisite_door: None,
            strict_pickup: false,
        }
    }

    pub fn reach_cell(pos: Pos) -> Self {
        Self {
            success: SuccessKind::ReachTargetCell,
            target_cell: Some(pos),
            ..Self::reach_goal()
        }
    }

    pub fn pickup(target: Object, strict: bool) -> Self {
        Self {
            success: SuccessKind::PickupTarget,
            target_object: Some(target),
            strict_pickup: strict,
            ..Self::reach_goal()
        }
    }

    pub fn go_to(target: Object) -> Self {
        Self {
            success: SuccessKind::AdjacentToTarget,
            target_object: Some(target),
            ..Self::reach_goal()
        }
    }

    pub fn put_near(carry: Object, target: Object) -> Self {
        Self {
            success: SuccessKind::AdjacentToTarget,
            target_object: Some(target),
            carry_object: Some(carry),
            strict_pickup: true,
            ..Self::reach_goal()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub success: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Reward for succeeding after `step_count` transitions out of `max_steps`.
pub fn success_reward(step_count: u32, max_steps: u32) -> f64 {
    1.0 - 0.9 * (step_count as f64 / max_steps as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    pub(crate) task: TaskId,
    pub(crate) seed: u64,
    pub(crate) width: usize,
    pub(crate) height: usize,
    pub(crate) cells: Vec<Cell>,
    pub(crate) agent_pos: Pos,
    pub(crate) agent_dir: Dir,
    pub(crate) carrying: Option<Object>,
    pub(crate) step_count: u32,
    pub(crate) max_steps: u32,
    pub(crate) mission: Mission,
    /// Balls wander each step and collisions end the episode.
    pub(crate) dynamic_obstacles: bool,
    pub(crate) finished: bool,
}

impl GridWorld {
    /// Bordered empty world; used by generators and fixtures.
    pub fn empty(task: TaskId, width: usize, height: usize, max_steps: u32) -> Self {
        let mut cells = vec![Cell::Empty; width * height];
        for y in 0..height {
            for x in 0..width {
                if x == 0 || y == 0 || x + 1 == width || y + 1 == height {
                    cells[y * width + x] = Cell::Wall;
                }
            }
        }
        Self {
            task,
            seed: 0,
            width,
            height,
            cells,
            agent_pos: Pos::new(1, 1),
            agent_dir: Dir::E,
            carrying: None,
            step_count: 0,
            max_steps,
            mission: Mission::reach_goal(),
            dynamic_obstacles: false,
            finished: false,
        }
    }

    pub fn task(&self) -> TaskId {
        self.task
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn agent_pos(&self) -> Pos {
        self.agent_pos
    }
    pub fn agent_dir(&self) -> Dir {
        self.agent_dir
    }
    pub fn carrying(&self) -> Option<Object> {
        self.carrying
    }
    pub fn step_count(&self) -> u32 {
        self.step_count
    }
    pub fn max_steps(&self) -> u32 {
        self.max_steps
    }
    pub fn mission(&self) -> &Mission {
        &self.mission
    }
    pub fn has_dynamic_obstacles(&self) -> bool {
        self.dynamic_obstacles
    }
    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    /// Out-of-bounds reads return a wall.
    pub fn cell(&self, p: Pos) -> Cell {
        if self.in_bounds(p) {
            self.cells[p.y as usize * self.width + p.x as usize]
        } else {
            Cell::Wall
        }
    }

    pub fn set_cell(&mut self, p: Pos, cell: Cell) {
        assert!(self.in_bounds(p), "set_cell out of bounds: {p:?}");
        let w = self.width;
        self.cells[p.y as usize * w + p.x as usize] = cell;
    }

    pub fn set_agent(&mut self, pos: Pos, dir: Dir) {
        self.agent_pos = pos;
        self.agent_dir = dir;
    }

    pub fn set_mission(&mut self, mission: Mission) {
        self.mission = mission;
    }

    pub fn set_dynamic_obstacles(&mut self, on: bool) {
        self.dynamic_obstacles = on;
    }

    pub fn front_pos(&self) -> Pos {
        self.agent_pos.step(self.agent_dir)
    }

    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Pos::new(x as i32, y as i32)))
    }

    pub fn find(&self, pred: impl Fn(Cell) -> bool) -> Option<Pos> {
        self.positions().find(|&p| pred(self.cell(p)))
    }

    pub fn observation(&self) -> Observation {
        encode_observation(self)
    }

    /// Checks the structural invariants of a world.
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |msg: String| Err(EnvError::InvalidWorld(msg));
        if !(5..=16).contains(&self.width) || !(5..=16).contains(&self.height) {
            return bad(format!("size {}x{} outside [5, 16]", self.width, self.height));
        }
        if self.cells.len() != self.width * self.height {
            return bad("cell count does not match dimensions".into());
        }
        for p in self.positions() {
            let border = p.x == 0 || p.y == 0 || p.x as usize == self.width - 1 || p.y as usize == self.height - 1;
            if border && self.cell(p) != Cell::Wall {
                return bad(format!("border cell {p:?} is not a wall"));
            }
        }
        if !self.in_bounds(self.agent_pos) {
            return bad("agent out of bounds".into());
        }
        match self.cell(self.agent_pos) {
            Cell::Empty | Cell::Goal | Cell::Door { state: DoorState::Open, .. } => {}
            other => return bad(format!("agent stands on {other:?}")),
        }
        if self.max_steps == 0 || self.step_count > self.max_steps {
            return bad("step counter out of range".into());
        }
        Ok(())
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeOver);
        }
        self.step_count += 1;
        if self.dynamic_obstacles {
            self.move_obstacles();
        }

        let front = self.front_pos();
        let front_cell = self.cell(front);
        let mut success = false;
        let mut failed = false;

        match action {
            Action::TurnLeft => self.agent_dir = self.agent_dir.left(),
            Action::TurnRight => self.agent_dir = self.agent_dir.right(),
            Action::Forward => {
                if self.dynamic_obstacles && front_cell.kind() == Kind::Ball {
                    failed = true;
                } else if front_cell == Cell::Lava {
                    failed = true;
                } else if front_cell.is_passable() {
                    self.agent_pos = front;
                    if front_cell == Cell::Goal && self.mission.success == SuccessKind::ReachGoal {
                        success = true;
                    }
                    if self.mission.success == SuccessKind::ReachTargetCell
                        && self.mission.target_cell == Some(front)
                    {
                        success = true;
                    }
                }
            }
            Action::Pickup => {
                if self.carrying.is_none() && front_cell.kind().is_carriable() && !self.dynamic_obstacles {
                    let obj = front_cell.object().expect("carriable cell holds an object");
                    self.carrying = Some(obj);
                    self.set_cell(front, Cell::Empty);
                    let wanted = match self.mission.success {
                        SuccessKind::PickupTarget => self.mission.target_object,
                        _ => self.mission.carry_object,
                    };
                    if self.mission.success == SuccessKind::PickupTarget && wanted == Some(obj) {
                        success = true;
                    } else if self.mission.strict_pickup && wanted != Some(obj) {
                        failed = true;
                    }
                }
            }
            Action::Drop => {
                if let Some(obj) = self.carrying {
                    if front_cell == Cell::Empty {
                        self.set_cell(front, obj.to_cell());
                        self.carrying = None;
                        if self.mission.carry_object == Some(obj) {
                            let near = self
                                .mission
                                .target_object
                                .and_then(|t| self.find(|c| t.matches(c)))
                                .is_some_and(|tp| tp.is_near(front));
                            if near {
                                success = true;
                            } else {
                                failed = true;
                            }
                        }
                    }
                }
            }
            Action::Toggle => {
                if let Cell::Door { color, state } = front_cell {
                    let next = match state {
                        DoorState::Open => DoorState::Closed,
                        DoorState::Closed => DoorState::Open,
                        DoorState::Locked => {
                            if self.carrying == Some(Object::new(Kind::Key, color)) {
                                DoorState::Open
                            } else {
                                DoorState::Locked
                            }
                        }
                    };
                    self.set_cell(front, Cell::Door { color, state: next });
                    if next == DoorState::Open && state != DoorState::Open {
                        if let Some(pre) = self.mission.prerequisite_door {
                            let pre_open = self.cell(pre).door_state() == Some(DoorState::Open);
                            if self.mission.target_cell == Some(front) && !pre_open {
                                failed = true;
                            }
                        }
                    }
                }
            }
            Action::Done => {
                if self.mission.success == SuccessKind::AdjacentToTarget && self.mission.carry_object.is_none() {
                    let hit = self.mission.target_object.is_some_and(|t| t.matches(front_cell));
                    if hit {
                        success = true;
                    } else {
                        failed = true;
                    }
                }
            }
        }

        let reward = if success {
            success_reward(self.step_count, self.max_steps)
        } else {
            0.0
        };
        let terminated = success || failed;
        let truncated = !terminated && self.step_count >= self.max_steps;
        self.finished = terminated || truncated;
        Ok(StepResult {
            observation: self.observation(),
            reward,
            terminated,
            truncated,
            success,
        })
    }

    fn move_obstacles(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (self.step_count as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let obstacles: Vec<Pos> = self.positions().filter(|&p| self.cell(p).kind() == Kind::Ball).collect();
        for p in obstacles {
            let choice = rng.random_range(0..5usize);
            if choice == 4 {
                continue;
            }
            let target = p.step(Dir::from_index(choice));
            if self.cell(target) == Cell::Empty && target != self.agent_pos {
                let ball = self.cell(p);
                self.set_cell(target, ball);
                self.set_cell(p, Cell::Empty);
            }
        }
    }
}
