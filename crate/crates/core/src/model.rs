//! Board geometry, configuration and the small value types shared by every
//! other module.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, GeometryError};

/// Identifier of a player within one game.
pub type PlayerId = u32;

/// All board, cost, risk and timing parameters of a game.
///
/// Defaults reproduce the reference experiment setup: a 6 by 18 board with a
/// 6-row task area, four goals per team, three players per team and six
/// initial pieces with a new piece every 300 ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub board_width: u32,
    pub board_height: u32,
    pub task_area_height: u32,
    pub goals_per_team: u32,
    pub players_per_team: u32,
    /// Probability that a spawned piece is a sham.
    pub risk_level: f64,
    pub move_cost_ms: u64,
    pub discovery_cost_ms: u64,
    pub pickup_cost_ms: u64,
    pub place_cost_ms: u64,
    pub test_cost_ms: u64,
    pub exchange_cost_ms: u64,
    pub initial_pieces: u32,
    pub piece_spawn_interval_ms: u64,
    pub max_game_time_ms: u64,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            board_width: 6,
            board_height: 18,
            task_area_height: 6,
            goals_per_team: 4,
            players_per_team: 3,
            risk_level: 0.0,
            move_cost_ms: 20,
            discovery_cost_ms: 100,
            pickup_cost_ms: 20,
            place_cost_ms: 20,
            test_cost_ms: 200,
            exchange_cost_ms: 300,
            initial_pieces: 6,
            piece_spawn_interval_ms: 300,
            max_game_time_ms: 600_000,
            seed: 0,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.board_width == 0 || self.board_height == 0 {
            return Err(ConfigError::EmptyBoard);
        }
        if self.task_area_height == 0 || self.task_area_height >= self.board_height {
            return Err(ConfigError::TaskAreaHeight {
                task_area_height: self.task_area_height,
                board_height: self.board_height,
            });
        }
        let goal_rows = self.board_height - self.task_area_height;
        if !goal_rows.is_multiple_of(2) {
            return Err(ConfigError::UnevenGoalAreas { goal_rows });
        }
        let goal_fields = self.board_width * (goal_rows / 2);
        if self.goals_per_team == 0 || self.goals_per_team > goal_fields {
            return Err(ConfigError::TooManyGoals {
                goals: self.goals_per_team,
                fields: goal_fields,
            });
        }
        if self.players_per_team == 0 || self.players_per_team > goal_fields {
            return Err(ConfigError::TooManyPlayers {
                players: self.players_per_team,
                fields: goal_fields,
            });
        }
        let task_fields = self.board_width * self.task_area_height;
        if self.initial_pieces > task_fields {
            return Err(ConfigError::TooManyPieces {
                pieces: self.initial_pieces,
                fields: task_fields,
            });
        }
        if !(0.0..=1.0).contains(&self.risk_level) {
            return Err(ConfigError::RiskOutOfRange(self.risk_level));
        }
        if self.piece_spawn_interval_ms == 0 {
            return Err(ConfigError::ZeroSpawnInterval);
        }
        Ok(())
    }

    /// Parses a JSON config document; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: GameConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Height in rows of each team's goal area.
    pub fn goal_area_height(&self) -> u32 {
        (self.board_height - self.task_area_height) / 2
    }

    pub fn contains(&self, pos: Position) -> bool {
        pos.x < self.board_width && pos.y < self.board_height
    }

    pub fn total_players(&self) -> u32 {
        2 * self.players_per_team
    }

    /// Every on-board position in row-major order.
    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.board_height).flat_map(move |y| (0..self.board_width).map(move |x| Position { x, y }))
    }

    /// Row range `[start, end)` covered by an area.
    pub fn area_rows(&self, area: Area) -> (u32, u32) {
        let gh = self.goal_area_height();
        match area {
            Area::RedGoalArea => (0, gh),
            Area::TaskArea => (gh, gh + self.task_area_height),
            Area::BlueGoalArea => (gh + self.task_area_height, self.board_height),
        }
    }

    pub fn area_positions(&self, area: Area) -> impl Iterator<Item = Position> + '_ {
        let (start, end) = self.area_rows(area);
        (start..end).flat_map(move |y| (0..self.board_width).map(move |x| Position { x, y }))
    }

    pub fn cost_of(&self, action: &crate::master::GameAction) -> u64 {
        use crate::master::GameAction;
        match action {
            GameAction::Move { .. } => self.move_cost_ms,
            GameAction::Discover => self.discovery_cost_ms,
            GameAction::PickUp => self.pickup_cost_ms,
            GameAction::Test => self.test_cost_ms,
            GameAction::Place => self.place_cost_ms,
            GameAction::ExchangeInfo { .. } => self.exchange_cost_ms,
        }
    }
}

/// A board field. `x` is the column, `y` the row; the origin is the top-left
/// corner and the red goal area occupies the top rows.
///
/// Positions order row-major (`y` first, then `x`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: u32,
    pub y: u32,
}

impl Position {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    /// The neighbouring field in `dir`, or `None` when it would leave the board.
    pub fn step(self, dir: Direction, cfg: &GameConfig) -> Option<Position> {
        let (dx, dy) = dir.offset();
        let x = i64::from(self.x) + dx;
        let y = i64::from(self.y) + dy;
        if x < 0 || y < 0 {
            return None;
        }
        let next = Position::new(x as u32, y as u32);
        cfg.contains(next).then_some(next)
    }
}

impl Ord for Position {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Position {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

impl std::str::FromStr for Position {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| GeometryError::BadPositionKey(s.to_owned()))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| GeometryError::BadPositionKey(s.to_owned()))
        };
        Ok(Position::new(parse(x)?, parse(y)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeamColor {
    Red,
    Blue,
}

impl TeamColor {
    pub const BOTH: [TeamColor; 2] = [TeamColor::Red, TeamColor::Blue];

    pub fn opponent(self) -> TeamColor {
        match self {
            TeamColor::Red => TeamColor::Blue,
            TeamColor::Blue => TeamColor::Red,
        }
    }

    pub fn goal_area(self) -> Area {
        match self {
            TeamColor::Red => Area::RedGoalArea,
            TeamColor::Blue => Area::BlueGoalArea,
        }
    }
}

impl fmt::Display for TeamColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TeamColor::Red => "red",
            TeamColor::Blue => "blue",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Area {
    RedGoalArea,
    TaskArea,
    BlueGoalArea,
}

/// A resource spawned in the task area. `is_sham` is hidden from players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    pub id: u64,
    pub is_sham: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    /// Tie-break order used by greedy movement.
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    pub fn offset(self) -> (i64, i64) {
        match self {
            Direction::North => (0, -1),
            Direction::South => (0, 1),
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
        }
    }
}

pub fn area_of(pos: Position, cfg: &GameConfig) -> Result<Area, GeometryError> {
    if !cfg.contains(pos) {
        return Err(GeometryError::OffBoard(pos));
    }
    let gh = cfg.goal_area_height();
    Ok(if pos.y < gh {
        Area::RedGoalArea
    } else if pos.y < gh + cfg.task_area_height {
        Area::TaskArea
    } else {
        Area::BlueGoalArea
    })
}

pub fn manhattan(a: Position, b: Position) -> u32 {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

/// On-board fields of the 3x3 square centred at `pos`, row-major.
pub fn neighborhood(pos: Position, cfg: &GameConfig) -> Vec<Position> {
    let mut out = Vec::with_capacity(9);
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            let x = i64::from(pos.x) + dx;
            let y = i64::from(pos.y) + dy;
            if x < 0 || y < 0 {
                continue;
            }
            let p = Position::new(x as u32, y as u32);
            if cfg.contains(p) {
                out.push(p);
            }
        }
    }
    out
}
