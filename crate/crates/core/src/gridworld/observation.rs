//! Egocentric one-hot observation encoding.
//!
//! The agent sees a `VIEW`×`VIEW` window. Row `VIEW - 1` is the agent's own
//! row, row 0 is the farthest row ahead; column `VIEW / 2` is straight ahead.
//! Each cell contributes three one-hot groups (kind, color + none, door state
//! + none) and the carried object adds one more group at the end.

use std::fmt;

use super::cell::{Cell, Color, DoorState, Kind, Pos};
use super::world::GridWorld;

pub const VIEW: usize = 5;
pub const CELL_CHANNELS: usize = Kind::COUNT + (Color::COUNT + 1) + (DoorState::COUNT + 1);
/// Carried (kind, color) for keys and balls, plus "nothing".
pub const CARRY_CHANNELS: usize = 2 * Color::COUNT + 1;
pub const OBS_DIM: usize = VIEW * VIEW * CELL_CHANNELS + CARRY_CHANNELS;
/// Number of ones in every observation.
pub const ACTIVE: usize = VIEW * VIEW * 3 + 1;

const COLOR_OFFSET: usize = Kind::COUNT;
const DOOR_OFFSET: usize = Kind::COUNT + Color::COUNT + 1;
const CARRY_OFFSET: usize = VIEW * VIEW * CELL_CHANNELS;

/// Sparse binary observation: the sorted indices of its `ACTIVE` ones.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Observation {
    active: [u16; ACTIVE],
}

impl fmt::Debug for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observation").field("active", &&self.active[..]).finish()
    }
}

impl Observation {
    pub fn len(&self) -> usize {
        OBS_DIM
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn active(&self) -> &[u16] {
        &self.active
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; OBS_DIM];
        for &i in &self.active {
            v[i as usize] = 1.0;
        }
        v
    }

    /// Decoded (kind, color, door state) indices for view cell (row, col).
    /// Color index 6 and door index 3 mean "none".
    pub fn cell_groups(&self, row: usize, col: usize) -> (usize, usize, usize) {
        let base = (row * VIEW + col) * CELL_CHANNELS;
        let k = self.active[(row * VIEW + col) * 3] as usize - base;
        let c = self.active[(row * VIEW + col) * 3 + 1] as usize - base - COLOR_OFFSET;
        let d = self.active[(row * VIEW + col) * 3 + 2] as usize - base - DOOR_OFFSET;
        (k, c, d)
    }

    pub fn carry_index(&self) -> usize {
        self.active[ACTIVE - 1] as usize - CARRY_OFFSET
    }
}

fn cell_indices(cell: Cell, slot: usize) -> [u16; 3] {
    let base = slot * CELL_CHANNELS;
    let kind = base + cell.kind().index();
    let color = base + COLOR_OFFSET + cell.color().map_or(Color::COUNT, Color::index);
    let door = base + DOOR_OFFSET + cell.door_state().map_or(DoorState::COUNT, DoorState::index);
    [kind as u16, color as u16, door as u16]
}

pub fn encode_observation(world: &GridWorld) -> Observation {
    let mut active = [0u16; ACTIVE];
    let fwd = world.agent_dir();
    let right = fwd.right();
    let (fx, fy) = fwd.delta();
    let (rx, ry) = right.delta();
    let origin = world.agent_pos();
    let half = (VIEW / 2) as i32;

    for col in 0..VIEW {
        let lateral = col as i32 - half;
        let mut blocked = false;
        for dist in 0..VIEW {
            let row = VIEW - 1 - dist;
            let d = dist as i32;
            let p = Pos::new(origin.x + d * fx + lateral * rx, origin.y + d * fy + lateral * ry);
            let cell = if blocked { Cell::Wall } else { world.cell(p) };
            if cell == Cell::Wall {
                blocked = true;
            }
            let slot = row * VIEW + col;
            active[slot * 3..slot * 3 + 3].copy_from_slice(&cell_indices(cell, slot));
        }
    }

    let carry = match world.carrying() {
        Some(obj) if obj.kind == Kind::Key => obj.color.index(),
        Some(obj) if obj.kind == Kind::Ball => Color::COUNT + obj.color.index(),
        Some(obj) => panic!("cannot carry {obj:?}"),
        None => 2 * Color::COUNT,
    };
    active[ACTIVE - 1] = (CARRY_OFFSET + carry) as u16;
    Observation { active }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::cell::{Dir, Object};
    use crate::gridworld::tasks::TaskId;

    #[test]
    fn dimension_is_488() {
        assert_eq!(OBS_DIM, 488);
        assert_eq!(CARRY_CHANNELS, 13);
    }

    #[test]
    fn border_facing_outward_sees_walls_ahead() {
        let mut w = GridWorld::empty(TaskId::Empty, 6, 6, 10);
        w.set_agent(Pos::new(1, 3), Dir::W);
        let obs = encode_observation(&w);
        for row in 0..VIEW - 1 {
            for col in 0..VIEW {
                assert_eq!(obs.cell_groups(row, col), (Kind::Wall.index(), 6, 3), "row {row} col {col}");
            }
        }
    }

    #[test]
    fn door_one_cell_ahead_is_center_front() {
        let mut w = GridWorld::empty(TaskId::Empty, 7, 5, 10);
        // Three-cell corridor along y = 2.
        for x in 1..6 {
            w.set_cell(Pos::new(x, 1), Cell::Wall);
            w.set_cell(Pos::new(x, 3), Cell::Wall);
        }
        w.set_agent(Pos::new(1, 2), Dir::E);
        w.set_cell(
            Pos::new(2, 2),
            Cell::Door {
                color: Color::Red,
                state: DoorState::Closed,
            },
        );
        let obs = encode_observation(&w);
        assert_eq!(
            obs.cell_groups(VIEW - 2, VIEW / 2),
            (Kind::Door.index(), Color::Red.index(), DoorState::Closed.index())
        );
        assert_eq!(obs.cell_groups(VIEW - 1, VIEW / 2), (Kind::Empty.index(), 6, 3));
    }

    #[test]
    fn cells_behind_walls_are_occluded() {
        let mut w = GridWorld::empty(TaskId::Empty, 9, 9, 10);
        w.set_agent(Pos::new(4, 7), Dir::N);
        w.set_cell(Pos::new(4, 5), Cell::Wall);
        w.set_cell(Pos::new(4, 4), Cell::Goal);
        let obs = encode_observation(&w);
        // Goal sits three rows ahead, behind the wall two rows ahead.
        assert_eq!(obs.cell_groups(VIEW - 4, VIEW / 2).0, Kind::Wall.index());
        w.set_cell(Pos::new(4, 5), Cell::Empty);
        let obs = encode_observation(&w);
        assert_eq!(obs.cell_groups(VIEW - 4, VIEW / 2).0, Kind::Goal.index());
    }

    #[test]
    fn carrying_is_encoded() {
        let mut w = GridWorld::empty(TaskId::Empty, 6, 6, 10);
        assert_eq!(encode_observation(&w).carry_index(), 12);
        w.carrying = Some(Object::new(Kind::Ball, Color::Blue));
        assert_eq!(encode_observation(&w).carry_index(), 6 + Color::Blue.index());
    }

    #[test]
    fn one_hot_groups_sum_to_one() {
        let mut w = GridWorld::empty(TaskId::Empty, 8, 8, 10);
        w.set_cell(Pos::new(3, 3), Cell::Key(Color::Yellow));
        w.set_agent(Pos::new(3, 5), Dir::N);
        let dense = encode_observation(&w).to_dense();
        for slot in 0..VIEW * VIEW {
            let base = slot * CELL_CHANNELS;
            let kind: f64 = dense[base..base + Kind::COUNT].iter().sum();
            let color: f64 = dense[base + COLOR_OFFSET..base + DOOR_OFFSET].iter().sum();
            let door: f64 = dense[base + DOOR_OFFSET..base + CELL_CHANNELS].iter().sum();
            assert_eq!((kind, color, door), (1.0, 1.0, 1.0));
        }
        assert_eq!(dense[CARRY_OFFSET..].iter().sum::<f64>(), 1.0);
    }
}
