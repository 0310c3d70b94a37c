//! Wire messages. Every message is one JSON object whose `type` field names
//! the variant; payloads reuse the engine's own JSON forms.

use project_game::master::{ActionResult, FinishReason};
use project_game::metrics::PlayerProfile;
use project_game::model::Area;
use project_game::{Belief, GameAction, GameConfig, PlayerId, Position, TeamColor};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    #[default]
    Agent,
    Human,
}

/// Game settings every player may see: the engine config minus its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicConfig {
    pub board_width: u32,
    pub board_height: u32,
    pub task_area_height: u32,
    pub goals_per_team: u32,
    pub players_per_team: u32,
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
}

impl From<&GameConfig> for PublicConfig {
    fn from(c: &GameConfig) -> Self {
        Self {
            board_width: c.board_width,
            board_height: c.board_height,
            task_area_height: c.task_area_height,
            goals_per_team: c.goals_per_team,
            players_per_team: c.players_per_team,
            risk_level: c.risk_level,
            move_cost_ms: c.move_cost_ms,
            discovery_cost_ms: c.discovery_cost_ms,
            pickup_cost_ms: c.pickup_cost_ms,
            place_cost_ms: c.place_cost_ms,
            test_cost_ms: c.test_cost_ms,
            exchange_cost_ms: c.exchange_cost_ms,
            initial_pieces: c.initial_pieces,
            piece_spawn_interval_ms: c.piece_spawn_interval_ms,
            max_game_time_ms: c.max_game_time_ms,
        }
    }
}

impl PublicConfig {
    /// An engine config with the given seed, for clients that simulate locally.
    pub fn with_seed(&self, seed: u64) -> GameConfig {
        GameConfig {
            board_width: self.board_width,
            board_height: self.board_height,
            task_area_height: self.task_area_height,
            goals_per_team: self.goals_per_team,
            players_per_team: self.players_per_team,
            risk_level: self.risk_level,
            move_cost_ms: self.move_cost_ms,
            discovery_cost_ms: self.discovery_cost_ms,
            pickup_cost_ms: self.pickup_cost_ms,
            place_cost_ms: self.place_cost_ms,
            test_cost_ms: self.test_cost_ms,
            exchange_cost_ms: self.exchange_cost_ms,
            initial_pieces: self.initial_pieces,
            piece_spawn_interval_ms: self.piece_spawn_interval_ms,
            max_game_time_ms: self.max_game_time_ms,
            seed,
        }
    }
}

/// Rows `[row_start, row_end)` spanning the full board width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaBounds {
    pub row_start: u32,
    pub row_end: u32,
}

impl AreaBounds {
    pub fn of(cfg: &GameConfig, area: Area) -> Self {
        let (row_start, row_end) = cfg.area_rows(area);
        Self { row_start, row_end }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Parse,
    UnknownType,
    GameFull,
    UnknownGame,
    NotReady,
    GameFinished,
    NotJoined,
    AlreadyJoined,
    NotStarted,
    WrongPlayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    /// client → server
    JoinGame {
        game_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preferred_team: Option<TeamColor>,
        #[serde(default)]
        mode: SessionMode,
        /// Answer to teammates' exchange requests; leaders accept regardless.
        #[serde(default = "yes")]
        accept_exchanges: bool,
    },
    JoinConfirmed {
        game_id: String,
        player_id: PlayerId,
        team: TeamColor,
        is_leader: bool,
    },
    GameStarted {
        game_id: String,
        player_id: PlayerId,
        t_ms: u64,
        config: Box<PublicConfig>,
        team: TeamColor,
        is_leader: bool,
        start: Position,
        goal_area: AreaBounds,
        teammates: Vec<PlayerId>,
    },
    /// client → server
    ActionRequest {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        player_id: Option<PlayerId>,
        action: GameAction,
    },
    ActionResult {
        game_id: String,
        player_id: PlayerId,
        t_ms: u64,
        result: ActionResult,
    },
    ExchangeDelivery {
        game_id: String,
        player_id: PlayerId,
        t_ms: u64,
        /// The other party of the exchange.
        with: PlayerId,
        /// The recipient's belief after the merge.
        belief: Belief,
    },
    GameOver {
        game_id: String,
        t_ms: u64,
        winner: Option<TeamColor>,
        reason: FinishReason,
        /// The recipient's own behavioral profile for the finished game.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<Box<PlayerProfile>>,
    },
    Error {
        code: ErrorCode,
        message: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        remaining_ms: Option<u64>,
    },
}

fn yes() -> bool {
    true
}

impl WireMessage {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        WireMessage::Error {
            code,
            message: message.into(),
            remaining_ms: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("wire messages always serialize")
    }

    /// Parses a message sent by a client. Only `join_game` and
    /// `action_request` are accepted in that direction.
    pub fn parse_client(text: &str) -> Result<WireMessage, WireMessage> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Self::error(ErrorCode::Parse, e.to_string()))?;
        let kind = value
            .get("type")
            .and_then(|t| t.as_str())
            .ok_or_else(|| Self::error(ErrorCode::Parse, "missing \"type\""))?;
        if !matches!(kind, "join_game" | "action_request") {
            return Err(Self::error(ErrorCode::UnknownType, format!("unexpected message type {kind:?}")));
        }
        serde_json::from_value(value).map_err(|e| Self::error(ErrorCode::Parse, e.to_string()))
    }
}
