use serde::{Deserialize, Serialize};

/// Cell kinds, in one-hot encoding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Empty,
    Wall,
    Lava,
    Goal,
    Door,
    Key,
    Ball,
    Box,
}

impl Kind {
    pub const COUNT: usize = 8;

    pub fn index(self) -> usize {
        self as usize
    }

    /// Objects the agent can carry.
    pub fn is_carriable(self) -> bool {
        matches!(self, Kind::Key | Kind::Ball)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Red,
    Green,
    Blue,
    Purple,
    Yellow,
    Grey,
}

impl Color {
    pub const COUNT: usize = 6;
    pub const ALL: [Color; 6] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Purple,
        Color::Yellow,
        Color::Grey,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn to_char(self) -> char {
        match self {
            Color::Red => 'r',
            Color::Green => 'g',
            Color::Blue => 'b',
            Color::Purple => 'p',
            Color::Yellow => 'y',
            Color::Grey => 'e',
        }
    }

    pub fn from_char(c: char) -> Option<Color> {
        Some(match c {
            'r' => Color::Red,
            'g' => Color::Green,
            'b' => Color::Blue,
            'p' => Color::Purple,
            'y' => Color::Yellow,
            'e' => Color::Grey,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoorState {
    Open,
    Closed,
    Locked,
}

impl DoorState {
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One grid cell. Colors and door states only exist on the variants that
/// carry them, so the "color iff object/door" rule holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Empty,
    Wall,
    Lava,
    Goal,
    Door { color: Color, state: DoorState },
    Key(Color),
    Ball(Color),
    Box(Color),
}

impl Cell {
    pub fn kind(self) -> Kind {
        match self {
            Cell::Empty => Kind::Empty,
            Cell::Wall => Kind::Wall,
            Cell::Lava => Kind::Lava,
            Cell::Goal => Kind::Goal,
            Cell::Door { .. } => Kind::Door,
            Cell::Key(_) => Kind::Key,
            Cell::Ball(_) => Kind::Ball,
            Cell::Box(_) => Kind::Box,
        }
    }

    pub fn color(self) -> Option<Color> {
        match self {
            Cell::Door { color, .. } | Cell::Key(color) | Cell::Ball(color) | Cell::Box(color) => {
                Some(color)
            }
            _ => None,
        }
    }

    pub fn door_state(self) -> Option<DoorState> {
        match self {
            Cell::Door { state, .. } => Some(state),
            _ => None,
        }
    }

    /// Whether the agent may occupy this cell.
    pub fn is_passable(self) -> bool {
        matches!(
            self,
            Cell::Empty
                | Cell::Goal
                | Cell::Lava
                | Cell::Door {
                    state: DoorState::Open,
                    ..
                }
        )
    }

    pub fn object(self) -> Option<Object> {
        match self {
            Cell::Key(c) => Some(Object::new(Kind::Key, c)),
            Cell::Ball(c) => Some(Object::new(Kind::Ball, c)),
            Cell::Box(c) => Some(Object::new(Kind::Box, c)),
            _ => None,
        }
    }

    /// Three-character dump token: kind, color, door state (`.` when absent).
    pub fn to_token(self) -> String {
        let kind = match self {
            Cell::Empty => '.',
            Cell::Wall => 'W',
            Cell::Lava => 'L',
            Cell::Goal => 'G',
            Cell::Door { .. } => 'D',
            Cell::Key(_) => 'K',
            Cell::Ball(_) => 'A',
            Cell::Box(_) => 'B',
        };
        let color = self.color().map_or('.', Color::to_char);
        let state = match self.door_state() {
            None => '.',
            Some(DoorState::Open) => 'o',
            Some(DoorState::Closed) => 'c',
            Some(DoorState::Locked) => 'l',
        };
        [kind, color, state].iter().collect()
    }

    pub fn from_token(token: &str) -> Option<Cell> {
        let mut chars = token.chars();
        let (k, c, s) = (chars.next()?, chars.next()?, chars.next()?);
        if chars.next().is_some() {
            return None;
        }
        let color = Color::from_char(c);
        let cell = match k {
            '.' => Cell::Empty,
            'W' => Cell::Wall,
            'L' => Cell::Lava,
            'G' => Cell::Goal,
            'D' => {
                let state = match s {
                    'o' => DoorState::Open,
                    'c' => DoorState::Closed,
                    'l' => DoorState::Locked,
                    _ => return None,
                };
                return Some(Cell::Door {
                    color: color?,
                    state,
                });
            }
            'K' => Cell::Key(color?),
            'A' => Cell::Ball(color?),
            'B' => Cell::Box(color?),
            _ => return None,
        };
        if cell.color().is_none() && c != '.' || s != '.' {
            return None;
        }
        Some(cell)
    }
}

/// A (kind, color) pair naming an object or door.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Object {
    pub kind: Kind,
    pub color: Color,
}

impl Object {
    pub fn new(kind: Kind, color: Color) -> Self {
        Self { kind, color }
    }

    pub fn matches(self, cell: Cell) -> bool {
        cell.kind() == self.kind && cell.color() == Some(self.color)
    }

    pub fn to_cell(self) -> Cell {
        match self.kind {
            Kind::Key => Cell::Key(self.color),
            Kind::Ball => Cell::Ball(self.color),
            Kind::Box => Cell::Box(self.color),
            Kind::Door => Cell::Door {
                color: self.color,
                state: DoorState::Closed,
            },
            other => panic!("{other:?} is not an object kind"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, dir: Dir) -> Pos {
        let (dx, dy) = dir.delta();
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn offset(self, dx: i32, dy: i32) -> Pos {
        Pos::new(self.x + dx, self.y + dy)
    }

    /// Chebyshev distance at most one, excluding the cell itself.
    pub fn is_near(self, other: Pos) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::N => (0, -1),
            Dir::E => (1, 0),
            Dir::S => (0, 1),
            Dir::W => (-1, 0),
        }
    }

    pub fn right(self) -> Dir {
        match self {
            Dir::N => Dir::E,
            Dir::E => Dir::S,
            Dir::S => Dir::W,
            Dir::W => Dir::N,
        }
    }

    pub fn left(self) -> Dir {
        match self {
            Dir::N => Dir::W,
            Dir::E => Dir::N,
            Dir::S => Dir::E,
            Dir::W => Dir::S,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Dir {
        Dir::ALL[i & 3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    TurnLeft,
    TurnRight,
    Forward,
    Pickup,
    Drop,
    Toggle,
    Done,
}

impl Action {
    pub const COUNT: usize = 7;
    pub const ALL: [Action; 7] = [
        Action::TurnLeft,
        Action::TurnRight,
        Action::Forward,
        Action::Pickup,
        Action::Drop,
        Action::Toggle,
        Action::Done,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }
}
