//! Breadth-first solvability oracle.
//!
//! Searches the discrete state (agent position × direction × carried object ×
//! door states × movable object positions) with its own compact copy of the
//! transition rules. Dynamic obstacles are frozen at their spawn cells.

use std::collections::{HashMap, VecDeque};

use super::cell::{Action, Cell, Dir, DoorState, Kind, Object, Pos};
use super::world::{GridWorld, SuccessKind};
use super::EnvError;

/// Explored-state budget before the oracle gives up.
pub const STATE_LIMIT: usize = 10_000_000;

const MAX_DOORS: usize = 8;
const MAX_OBJECTS: usize = 8;
const NONE: u8 = 255;

#[derive(Clone, Copy, PartialEq, Eq)]
struct State {
    pos: u8,
    dir: u8,
    carry: u8,
    doors: [u8; MAX_DOORS],
    objects: [u8; MAX_OBJECTS],
}

impl State {
    fn pack(&self) -> u128 {
        let mut k = self.pos as u128 | (self.dir as u128) << 8 | ((self.carry & 15) as u128) << 10;
        for (i, d) in self.doors.iter().enumerate() {
            k |= (*d as u128) << (14 + 2 * i);
        }
        for (i, o) in self.objects.iter().enumerate() {
            k |= (*o as u128) << (30 + 8 * i);
        }
        k
    }
}

enum Next {
    Continue(State),
    Success,
    Fail,
}

struct Model {
    width: usize,
    /// Static layer: doors and movable objects removed.
    base: Vec<Cell>,
    door_pos: Vec<u8>,
    door_color: Vec<super::cell::Color>,
    objects: Vec<Object>,
    world: GridWorld,
}

fn door_code(s: DoorState) -> u8 {
    match s {
        DoorState::Open => 0,
        DoorState::Closed => 1,
        DoorState::Locked => 2,
    }
}

fn door_state(code: u8) -> DoorState {
    match code {
        0 => DoorState::Open,
        1 => DoorState::Closed,
        _ => DoorState::Locked,
    }
}

impl Model {
    fn new(world: &GridWorld) -> Result<(Model, State), EnvError> {
        let mut base = Vec::with_capacity(world.width() * world.height());
        let mut door_pos = Vec::new();
        let mut door_color = Vec::new();
        let mut doors = [0u8; MAX_DOORS];
        let mut objects = Vec::new();
        let mut object_pos = [NONE; MAX_OBJECTS];
        for p in world.positions() {
            let idx = (p.y as usize * world.width() + p.x as usize) as u8;
            let cell = world.cell(p);
            match cell {
                Cell::Door { color, state } => {
                    if door_pos.len() == MAX_DOORS {
                        return Err(EnvError::OracleOverflow("too many doors".into()));
                    }
                    doors[door_pos.len()] = door_code(state);
                    door_pos.push(idx);
                    door_color.push(color);
                    base.push(Cell::Empty);
                }
                c if c.kind().is_carriable() && !world.has_dynamic_obstacles() => {
                    if objects.len() == MAX_OBJECTS {
                        return Err(EnvError::OracleOverflow("too many objects".into()));
                    }
                    object_pos[objects.len()] = idx;
                    objects.push(c.object().expect("object cell"));
                    base.push(Cell::Empty);
                }
                c => base.push(c),
            }
        }
        let mut carry = NONE;
        if let Some(obj) = world.carrying() {
            if objects.len() == MAX_OBJECTS {
                return Err(EnvError::OracleOverflow("too many objects".into()));
            }
            carry = objects.len() as u8;
            objects.push(obj);
        }
        let start = State {
            pos: (world.agent_pos().y as usize * world.width() + world.agent_pos().x as usize) as u8,
            dir: world.agent_dir().index() as u8,
            carry,
            doors,
            objects: object_pos,
        };
        Ok((
            Model {
                width: world.width(),
                base,
                door_pos,
                door_color,
                objects,
                world: world.clone(),
            },
            start,
        ))
    }

    fn idx(&self, p: Pos) -> u8 {
        (p.y as usize * self.width + p.x as usize) as u8
    }

    fn pos(&self, idx: u8) -> Pos {
        Pos::new(idx as i32 % self.width as i32, idx as i32 / self.width as i32)
    }

    fn cell(&self, s: &State, idx: u8) -> Cell {
        if let Some(d) = self.door_pos.iter().position(|&p| p == idx) {
            return Cell::Door {
                color: self.door_color[d],
                state: door_state(s.doors[d]),
            };
        }
        if let Some(o) = (0..self.objects.len()).find(|&o| s.objects[o] == idx) {
            return self.objects[o].to_cell();
        }
        self.base[idx as usize]
    }

    fn find_object(&self, s: &State, target: Object) -> Option<Pos> {
        if let Some(o) = (0..self.objects.len()).find(|&o| self.objects[o] == target && s.objects[o] != NONE) {
            return Some(self.pos(s.objects[o]));
        }
        self.base
            .iter()
            .position(|&c| target.matches(c))
            .map(|i| self.pos(i as u8))
    }

    fn transition(&self, s: &State, action: Action) -> Next {
        let mission = self.world.mission();
        let dir = Dir::from_index(s.dir as usize);
        let front = self.pos(s.pos).step(dir);
        if !self.world.in_bounds(front) {
            // Borders are walls; only turning changes anything.
            return match action {
                Action::TurnLeft | Action::TurnRight => self.turn(s, action),
                _ => Next::Continue(*s),
            };
        }
        let fi = self.idx(front);
        let front_cell = self.cell(s, fi);
        let mut n = *s;
        match action {
            Action::TurnLeft | Action::TurnRight => return self.turn(s, action),
            Action::Forward => {
                if self.world.has_dynamic_obstacles() && front_cell.kind() == Kind::Ball {
                    return Next::Fail;
                }
                if front_cell == Cell::Lava {
                    return Next::Fail;
                }
                if front_cell.is_passable() {
                    n.pos = fi;
                    if front_cell == Cell::Goal && mission.success == SuccessKind::ReachGoal {
                        return Next::Success;
                    }
                    if mission.success == SuccessKind::ReachTargetCell && mission.target_cell == Some(front) {
                        return Next::Success;
                    }
                }
            }
            Action::Pickup => {
                if s.carry == NONE && front_cell.kind().is_carriable() && !self.world.has_dynamic_obstacles() {
                    let o = (0..self.objects.len())
                        .find(|&o| s.objects[o] == fi)
                        .expect("carriable cell is a tracked object");
                    let obj = self.objects[o];
                    n.carry = o as u8;
                    n.objects[o] = NONE;
                    let wanted = match mission.success {
                        SuccessKind::PickupTarget => mission.target_object,
                        _ => mission.carry_object,
                    };
                    if mission.success == SuccessKind::PickupTarget && wanted == Some(obj) {
                        return Next::Success;
                    }
                    if mission.strict_pickup && wanted != Some(obj) {
                        return Next::Fail;
                    }
                }
            }
            Action::Drop => {
                if s.carry != NONE && front_cell == Cell::Empty {
                    let o = s.carry as usize;
                    n.objects[o] = fi;
                    n.carry = NONE;
                    if mission.carry_object == Some(self.objects[o]) {
                        let near = mission
                            .target_object
                            .and_then(|t| self.find_object(&n, t))
                            .is_some_and(|tp| tp.is_near(front));
                        return if near { Next::Success } else { Next::Fail };
                    }
                }
            }
            Action::Toggle => {
                if let Some(d) = self.door_pos.iter().position(|&p| p == fi) {
                    let color = self.door_color[d];
                    let state = door_state(s.doors[d]);
                    let next = match state {
                        DoorState::Open => DoorState::Closed,
                        DoorState::Closed => DoorState::Open,
                        DoorState::Locked => {
                            let has_key = s.carry != NONE && self.objects[s.carry as usize] == Object::new(Kind::Key, color);
                            if has_key {
                                DoorState::Open
                            } else {
                                DoorState::Locked
                            }
                        }
                    };
                    n.doors[d] = door_code(next);
                    if next == DoorState::Open && state != DoorState::Open {
                        if let Some(pre) = mission.prerequisite_door {
                            let pre_open = self.cell(&n, self.idx(pre)).door_state() == Some(DoorState::Open);
                            if mission.target_cell == Some(front) && !pre_open {
                                return Next::Fail;
                            }
                        }
                    }
                }
            }
            Action::Done => {
                if mission.success == SuccessKind::AdjacentToTarget && mission.carry_object.is_none() {
                    let hit = mission.target_object.is_some_and(|t| t.matches(front_cell));
                    return if hit { Next::Success } else { Next::Fail };
                }
            }
        }
        Next::Continue(n)
    }

    fn turn(&self, s: &State, action: Action) -> Next {
        let dir = Dir::from_index(s.dir as usize);
        let mut n = *s;
        n.dir = match action {
            Action::TurnLeft => dir.left(),
            _ => dir.right(),
        }
        .index() as u8;
        Next::Continue(n)
    }
}

/// Shortest action sequence to success within the remaining step budget,
/// `Ok(None)` if none exists.
pub fn shortest_plan(world: &GridWorld) -> Result<Option<Vec<Action>>, EnvError> {
    let (model, start) = Model::new(world)?;
    let budget = world.max_steps().saturating_sub(world.step_count()) as usize;
    let start_key = start.pack();
    let mut parents: HashMap<u128, (u128, u8)> = HashMap::new();
    parents.insert(start_key, (start_key, NONE));
    let mut frontier = VecDeque::from([(start, 0usize)]);

    let rebuild = |parents: &HashMap<u128, (u128, u8)>, mut key: u128, last: Action| {
        let mut plan = vec![last];
        while key != start_key {
            let (prev, a) = parents[&key];
            plan.push(Action::ALL[a as usize]);
            key = prev;
        }
        plan.reverse();
        plan
    };

    while let Some((s, depth)) = frontier.pop_front() {
        if depth >= budget {
            continue;
        }
        let key = s.pack();
        for action in Action::ALL {
            match model.transition(&s, action) {
                Next::Success => return Ok(Some(rebuild(&parents, key, action))),
                Next::Fail => {}
                Next::Continue(n) => {
                    let nk = n.pack();
                    if let std::collections::hash_map::Entry::Vacant(e) = parents.entry(nk) {
                        e.insert((key, action.index() as u8));
                        if parents.len() > STATE_LIMIT {
                            return Err(EnvError::OracleOverflow(format!("more than {STATE_LIMIT} states")));
                        }
                        frontier.push_back((n, depth + 1));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Whether some action sequence reaches success before truncation.
/// Oracle overflow counts as unsolvable.
pub fn solvable(world: &GridWorld) -> bool {
    matches!(shortest_plan(world), Ok(Some(_)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::cell::Color;
    use crate::gridworld::tasks::{make_task, TaskId};

    #[test]
    fn empty_is_solvable() {
        let w = make_task(TaskId::Empty, 0).unwrap();
        assert!(solvable(&w));
        // (1,1) facing east to (4,4): 3 forward, turn, 3 forward.
        assert_eq!(shortest_plan(&w).unwrap().unwrap().len(), 7);
    }

    #[test]
    fn walled_off_goal_is_unsolvable() {
        let mut w = GridWorld::empty(TaskId::Empty, 7, 7, 100);
        w.set_cell(Pos::new(4, 4), Cell::Goal);
        for p in [Pos::new(3, 4), Pos::new(5, 4), Pos::new(4, 3), Pos::new(4, 5)] {
            w.set_cell(p, Cell::Wall);
        }
        assert!(!solvable(&w));
    }

    #[test]
    fn unlock_needs_its_key() {
        let w = make_task(TaskId::Unlock, 3).unwrap();
        assert!(solvable(&w));
        let key = w.find(|c| c.kind() == Kind::Key).unwrap();
        let mut stripped = w.clone();
        stripped.set_cell(key, Cell::Empty);
        assert!(!solvable(&stripped));
    }

    #[test]
    fn budget_too_small_is_unsolvable() {
        let mut w = make_task(TaskId::Empty, 0).unwrap();
        w.max_steps = 6;
        assert!(!solvable(&w));
        w.max_steps = 7;
        assert!(solvable(&w));
    }

    #[test]
    fn key_of_wrong_color_does_not_open() {
        let mut w = GridWorld::empty(TaskId::DoorKey, 7, 5, 100);
        w.set_cell(Pos::new(3, 1), Cell::Wall);
        w.set_cell(Pos::new(3, 3), Cell::Wall);
        w.set_cell(Pos::new(3, 2), Cell::Door { color: Color::Red, state: DoorState::Locked });
        w.set_cell(Pos::new(5, 2), Cell::Goal);
        w.set_cell(Pos::new(1, 3), Cell::Key(Color::Blue));
        w.set_agent(Pos::new(1, 1), Dir::E);
        assert!(!solvable(&w));
        w.set_cell(Pos::new(1, 3), Cell::Key(Color::Red));
        assert!(solvable(&w));
    }
}
