//! Task registry and deterministic procedural generators.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cell::{Cell, Color, Dir, DoorState, Kind, Object, Pos};
use super::solver::solvable;
use super::world::{GridWorld, Mission, SuccessKind};
use super::EnvError;

const MAX_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    Empty,
    SimpleCrossing,
    LavaGap,
    FourRooms,
    MultiRoom,
    DoorKey,
    Unlock,
    UnlockPickup,
    KeyCorridor,
    RedBlueDoors,
    GoToDoor,
    GoToObject,
    Fetch,
    PutNear,
    DynamicObstacles,
}

impl TaskId {
    /// Registry order; also the tie-break order used by schedulers.
    pub const ALL: [TaskId; 15] = [
        TaskId::Empty,
        TaskId::SimpleCrossing,
        TaskId::LavaGap,
        TaskId::FourRooms,
        TaskId::MultiRoom,
        TaskId::DoorKey,
        TaskId::Unlock,
        TaskId::UnlockPickup,
        TaskId::KeyCorridor,
        TaskId::RedBlueDoors,
        TaskId::GoToDoor,
        TaskId::GoToObject,
        TaskId::Fetch,
        TaskId::PutNear,
        TaskId::DynamicObstacles,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Empty => "Empty",
            TaskId::SimpleCrossing => "SimpleCrossing",
            TaskId::LavaGap => "LavaGap",
            TaskId::FourRooms => "FourRooms",
            TaskId::MultiRoom => "MultiRoom",
            TaskId::DoorKey => "DoorKey",
            TaskId::Unlock => "Unlock",
            TaskId::UnlockPickup => "UnlockPickup",
            TaskId::KeyCorridor => "KeyCorridor",
            TaskId::RedBlueDoors => "RedBlueDoors",
            TaskId::GoToDoor => "GoToDoor",
            TaskId::GoToObject => "GoToObject",
            TaskId::Fetch => "Fetch",
            TaskId::PutNear => "PutNear",
            TaskId::DynamicObstacles => "DynamicObstacles",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Grid dimensions (width, height) including the border.
    pub fn size(self) -> (usize, usize) {
        match self {
            TaskId::Empty | TaskId::DynamicObstacles => (6, 6),
            TaskId::SimpleCrossing | TaskId::GoToDoor => (9, 9),
            TaskId::LavaGap => (7, 7),
            TaskId::FourRooms | TaskId::MultiRoom => (11, 11),
            TaskId::KeyCorridor => (11, 9),
            TaskId::Unlock | TaskId::UnlockPickup | TaskId::RedBlueDoors => (9, 7),
            TaskId::DoorKey | TaskId::GoToObject | TaskId::Fetch | TaskId::PutNear => (8, 8),
        }
    }

    pub fn max_steps(self) -> u32 {
        match self {
            TaskId::Empty => 144,
            TaskId::SimpleCrossing => 144,
            TaskId::LavaGap => 196,
            TaskId::FourRooms => 100,
            TaskId::MultiRoom => 120,
            TaskId::DoorKey => 256,
            TaskId::Unlock => 144,
            TaskId::UnlockPickup => 256,
            TaskId::KeyCorridor => 256,
            TaskId::RedBlueDoors => 144,
            TaskId::GoToDoor => 100,
            TaskId::GoToObject => 100,
            TaskId::Fetch => 100,
            TaskId::PutNear => 150,
            TaskId::DynamicObstacles => 144,
        }
    }

    pub fn success_kind(self) -> SuccessKind {
        match self {
            TaskId::Unlock | TaskId::RedBlueDoors => SuccessKind::ReachTargetCell,
            TaskId::UnlockPickup | TaskId::KeyCorridor | TaskId::Fetch => SuccessKind::PickupTarget,
            TaskId::GoToDoor | TaskId::GoToObject | TaskId::PutNear => SuccessKind::AdjacentToTarget,
            _ => SuccessKind::ReachGoal,
        }
    }

    pub fn spec(self, generator_seed: u64) -> TaskSpec {
        TaskSpec {
            task_id: self,
            generator_seed,
            max_steps: self.max_steps(),
            success_kind: self.success_kind(),
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskId::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| EnvError::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: TaskId,
    pub generator_seed: u64,
    pub max_steps: u32,
    pub success_kind: SuccessKind,
}

impl TaskSpec {
    pub fn build(&self) -> Result<GridWorld, EnvError> {
        make_task(self.task_id, self.generator_seed)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the instance of `task` for `seed`. Pure in (task, seed).
pub fn make_task(task: TaskId, seed: u64) -> Result<GridWorld, EnvError> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(attempt.wrapping_add(task.index() as u64 * 1000))));
        let Some(mut world) = generate(task, &mut rng) else {
            continue;
        };
        world.seed = seed;
        debug_assert!(world.validate().is_ok(), "{:?}", world.validate());
        if solvable(&world) {
            return Ok(world);
        }
    }
    Err(EnvError::GenerationFailed {
        task,
        seed,
        attempts: MAX_ATTEMPTS,
    })
}

/// Parse a task list like `"Empty,DoorKey"`.
pub fn parse_task_list(s: &str) -> Result<Vec<TaskId>, EnvError> {
    s.split(',').map(|t| t.trim().parse()).collect()
}

struct Gen<'r> {
    world: GridWorld,
    rng: &'r mut ChaCha8Rng,
}

impl<'r> Gen<'r> {
    fn new(task: TaskId, rng: &'r mut ChaCha8Rng) -> Self {
        let (w, h) = task.size();
        let mut world = GridWorld::empty(task, w, h, task.max_steps());
        world.agent_pos = Pos::new(-1, -1);
        Self { world, rng }
    }

    fn set(&mut self, x: i32, y: i32, cell: Cell) {
        self.world.set_cell(Pos::new(x, y), cell);
    }

    fn vwall(&mut self, x: i32, ys: std::ops::RangeInclusive<i32>) {
        for y in ys {
            self.set(x, y, Cell::Wall);
        }
    }

    fn hwall(&mut self, y: i32, xs: std::ops::RangeInclusive<i32>) {
        for x in xs {
            self.set(x, y, Cell::Wall);
        }
    }

    fn int(&mut self, range: std::ops::RangeInclusive<i32>) -> i32 {
        self.rng.random_range(range)
    }

    fn color(&mut self) -> Color {
        Color::ALL[self.rng.random_range(0..Color::COUNT)]
    }

    fn distinct_colors(&mut self, n: usize) -> Vec<Color> {
        let mut all = Color::ALL.to_vec();
        all.shuffle(self.rng);
        all.truncate(n);
        all
    }

    fn free(&self, p: Pos) -> bool {
        self.world.cell(p) == Cell::Empty && p != self.world.agent_pos
    }

    /// Uniform free cell inside the inclusive rectangle.
    fn random_free(&mut self, xs: std::ops::RangeInclusive<i32>, ys: std::ops::RangeInclusive<i32>) -> Option<Pos> {
        let candidates: Vec<Pos> = ys
            .flat_map(|y| xs.clone().map(move |x| Pos::new(x, y)))
            .filter(|&p| self.free(p))
            .collect();
        if candidates.is_empty() {
            return None;
        }
        Some(candidates[self.rng.random_range(0..candidates.len())])
    }

    fn place(&mut self, cell: Cell, xs: std::ops::RangeInclusive<i32>, ys: std::ops::RangeInclusive<i32>) -> Option<Pos> {
        let p = self.random_free(xs, ys)?;
        self.world.set_cell(p, cell);
        Some(p)
    }

    fn place_agent(&mut self, xs: std::ops::RangeInclusive<i32>, ys: std::ops::RangeInclusive<i32>) -> Option<Pos> {
        // Agent may not start on top of anything.
        self.world.agent_pos = Pos::new(-1, -1);
        let p = self.random_free(xs, ys)?;
        let dir = Dir::from_index(self.rng.random_range(0..4));
        self.world.set_agent(p, dir);
        Some(p)
    }

    fn inner(&self) -> (std::ops::RangeInclusive<i32>, std::ops::RangeInclusive<i32>) {
        (1..=self.world.width as i32 - 2, 1..=self.world.height as i32 - 2)
    }

    fn finish(self, mission: Mission) -> GridWorld {
        let mut w = self.world;
        w.mission = mission;
        w
    }
}

fn generate(task: TaskId, rng: &mut ChaCha8Rng) -> Option<GridWorld> {
    let mut g = Gen::new(task, rng);
    let world = match task {
        TaskId::Empty => {
            g.set(4, 4, Cell::Goal);
            g.world.set_agent(Pos::new(1, 1), Dir::E);
            g.finish(Mission::reach_goal())
        }
        TaskId::SimpleCrossing => {
            // One wall spanning the grid with a single gap; agent and goal in
            // opposite corners, so always on opposite sides.
            let k = 2 * g.int(1..=3);
            let gap = g.int(1..=7);
            if g.rng.random_bool(0.5) {
                g.vwall(k, 1..=7);
                g.set(k, gap, Cell::Empty);
            } else {
                g.hwall(k, 1..=7);
                g.set(gap, k, Cell::Empty);
            }
            g.set(7, 7, Cell::Goal);
            g.world.set_agent(Pos::new(1, 1), Dir::E);
            g.finish(Mission::reach_goal())
        }
        TaskId::LavaGap => {
            let x = g.int(2..=4);
            let gap = g.int(1..=5);
            for y in 1..=5 {
                if y != gap {
                    g.set(x, y, Cell::Lava);
                }
            }
            g.set(5, 5, Cell::Goal);
            g.world.set_agent(Pos::new(1, 1), Dir::E);
            g.finish(Mission::reach_goal())
        }
        TaskId::FourRooms => {
            g.vwall(5, 1..=9);
            g.hwall(5, 1..=9);
            let gaps = [
                Pos::new(5, g.int(1..=4)),
                Pos::new(5, g.int(6..=9)),
                Pos::new(g.int(1..=4), 5),
                Pos::new(g.int(6..=9), 5),
            ];
            for p in gaps {
                g.world.set_cell(p, Cell::Empty);
            }
            let (xs, ys) = g.inner();
            g.place(Cell::Goal, xs.clone(), ys.clone())?;
            g.place_agent(xs, ys)?;
            g.finish(Mission::reach_goal())
        }
        TaskId::MultiRoom => {
            let colors = g.distinct_colors(2);
            let split = g.int(4..=6);
            g.vwall(4, 1..=9);
            g.hwall(split, 5..=9);
            let d1 = g.int(1..=split - 1);
            g.set(4, d1, Cell::Door { color: colors[0], state: DoorState::Closed });
            let d2 = g.int(5..=9);
            g.set(d2, split, Cell::Door { color: colors[1], state: DoorState::Closed });
            g.place(Cell::Goal, 5..=9, split + 1..=9)?;
            g.place_agent(1..=3, 1..=9)?;
            g.finish(Mission::reach_goal())
        }
        TaskId::DoorKey => {
            let k = g.int(2..=5);
            g.vwall(k, 1..=6);
            let color = g.color();
            let dy = g.int(1..=6);
            g.set(k, dy, Cell::Door { color, state: DoorState::Locked });
            g.set(6, 6, Cell::Goal);
            g.place(Cell::Key(color), 1..=k - 1, 1..=6)?;
            g.place_agent(1..=k - 1, 1..=6)?;
            g.finish(Mission::reach_goal())
        }
        TaskId::Unlock | TaskId::UnlockPickup => {
            g.vwall(4, 1..=5);
            let color = g.color();
            let dy = g.int(1..=5);
            let door = Pos::new(4, dy);
            g.world.set_cell(door, Cell::Door { color, state: DoorState::Locked });
            g.place(Cell::Key(color), 1..=3, 1..=5)?;
            g.place_agent(1..=3, 1..=5)?;
            if task == TaskId::Unlock {
                g.finish(Mission::reach_cell(door))
            } else {
                let ball = Object::new(Kind::Ball, g.color());
                g.place(ball.to_cell(), 5..=7, 1..=5)?;
                g.finish(Mission::pickup(ball, false))
            }
        }
        TaskId::KeyCorridor => {
            // Corridor on y = 4 between two rows of three rooms.
            g.hwall(3, 1..=9);
            g.hwall(5, 1..=9);
            for x in [4, 7] {
                g.vwall(x, 1..=2);
                g.vwall(x, 6..=7);
            }
            let spans = [(1, 3), (5, 6), (8, 9)];
            let colors = g.distinct_colors(6);
            let locked = g.int(0..=5) as usize;
            let mut key_room = g.int(0..=4) as usize;
            if key_room >= locked {
                key_room += 1;
            }
            let mut rooms = Vec::new();
            for (i, color) in colors.iter().enumerate() {
                let (x0, x1) = spans[i % 3];
                let top = i < 3;
                let (wall_y, ys) = if top { (3, 1..=2) } else { (5, 6..=7) };
                let dx = g.int(x0..=x1);
                let state = if i == locked { DoorState::Locked } else { DoorState::Closed };
                g.set(dx, wall_y, Cell::Door { color: *color, state });
                rooms.push((x0..=x1, ys));
            }
            let ball = Object::new(Kind::Ball, g.color());
            let (xs, ys) = rooms[locked].clone();
            g.place(ball.to_cell(), xs, ys)?;
            let (xs, ys) = rooms[key_room].clone();
            g.place(Cell::Key(colors[locked]), xs, ys)?;
            g.place_agent(1..=9, 4..=4)?;
            g.finish(Mission::pickup(ball, false))
        }
        TaskId::RedBlueDoors => {
            g.vwall(2, 1..=5);
            g.vwall(6, 1..=5);
            let ry = g.int(1..=5);
            let by = g.int(1..=5);
            let red = Pos::new(2, ry);
            let blue = Pos::new(6, by);
            g.world.set_cell(red, Cell::Door { color: Color::Red, state: DoorState::Closed });
            g.world.set_cell(blue, Cell::Door { color: Color::Blue, state: DoorState::Closed });
            g.place_agent(3..=5, 1..=5)?;
            let mut m = Mission::reach_cell(blue);
            m.prerequisite_door = Some(red);
            g.finish(m)
        }
        TaskId::GoToDoor => {
            for i in 1..=7 {
                g.set(i, 1, Cell::Wall);
                g.set(i, 7, Cell::Wall);
                g.set(1, i, Cell::Wall);
                g.set(7, i, Cell::Wall);
            }
            let mut colors = g.distinct_colors(4);
            if !colors.contains(&Color::Red) {
                let slot = g.int(0..=3) as usize;
                colors[slot] = Color::Red;
            }
            let doors = [
                Pos::new(g.int(2..=6), 1),
                Pos::new(g.int(2..=6), 7),
                Pos::new(1, g.int(2..=6)),
                Pos::new(7, g.int(2..=6)),
            ];
            for (p, color) in doors.iter().zip(&colors) {
                g.world.set_cell(*p, Cell::Door { color: *color, state: DoorState::Closed });
            }
            g.place_agent(2..=6, 2..=6)?;
            g.finish(Mission::go_to(Object::new(Kind::Door, Color::Red)))
        }
        TaskId::GoToObject => {
            let target = Object::new(Kind::Ball, Color::Green);
            let (xs, ys) = g.inner();
            g.place(target.to_cell(), xs.clone(), ys.clone())?;
            for _ in 0..2 {
                let d = random_object(&mut g, &[Kind::Key, Kind::Ball, Kind::Box], &[target]);
                g.place(d.to_cell(), xs.clone(), ys.clone())?;
            }
            g.place_agent(xs, ys)?;
            g.finish(Mission::go_to(target))
        }
        TaskId::Fetch => {
            let target = Object::new(Kind::Key, Color::Blue);
            let (xs, ys) = g.inner();
            g.place(target.to_cell(), xs.clone(), ys.clone())?;
            for _ in 0..2 {
                let d = random_object(&mut g, &[Kind::Key, Kind::Ball], &[target]);
                g.place(d.to_cell(), xs.clone(), ys.clone())?;
            }
            g.place_agent(xs, ys)?;
            g.finish(Mission::pickup(target, true))
        }
        TaskId::PutNear => {
            let carry = Object::new(Kind::Ball, Color::Yellow);
            let anchor = Object::new(Kind::Box, Color::Purple);
            let (xs, ys) = g.inner();
            let a = g.place(anchor.to_cell(), xs.clone(), ys.clone())?;
            let c = g.place(carry.to_cell(), xs.clone(), ys.clone())?;
            if a.is_near(c) {
                return None;
            }
            let d = random_object(&mut g, &[Kind::Key, Kind::Ball], &[carry]);
            g.place(d.to_cell(), xs.clone(), ys.clone())?;
            g.place_agent(xs, ys)?;
            g.finish(Mission::put_near(carry, anchor))
        }
        TaskId::DynamicObstacles => {
            g.set(4, 4, Cell::Goal);
            g.world.set_agent(Pos::new(1, 1), Dir::E);
            for _ in 0..2 {
                g.place(Cell::Ball(Color::Blue), 1..=4, 1..=4)?;
            }
            let mut w = g.finish(Mission::reach_goal());
            w.dynamic_obstacles = true;
            w
        }
    };
    Some(world)
}

fn random_object(g: &mut Gen<'_>, kinds: &[Kind], exclude: &[Object]) -> Object {
    loop {
        let kind = kinds[g.rng.random_range(0..kinds.len())];
        let obj = Object::new(kind, g.color());
        if !exclude.contains(&obj) {
            return obj;
        }
    }
}
