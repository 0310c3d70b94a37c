use thiserror::Error;

use crate::model::{PlayerId, Position};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("position {0} is off the board")]
    OffBoard(Position),
    #[error("malformed position key {0:?}, expected \"x,y\"")]
    BadPositionKey(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("board must have at least one column and one row")]
    EmptyBoard,
    #[error("task area height {task_area_height} must be positive and below board height {board_height}")]
    TaskAreaHeight {
        task_area_height: u32,
        board_height: u32,
    },
    #[error("the {goal_rows} non-task rows cannot be split into two equal goal areas")]
    UnevenGoalAreas { goal_rows: u32 },
    #[error("{goals} goals per team do not fit into {fields} goal-area fields")]
    TooManyGoals { goals: u32, fields: u32 },
    #[error("{players} players per team do not fit into {fields} goal-area fields")]
    TooManyPlayers { players: u32, fields: u32 },
    #[error("{pieces} initial pieces do not fit into {fields} task-area fields")]
    TooManyPieces { pieces: u32, fields: u32 },
    #[error("risk level {0} is outside [0, 1]")]
    RiskOutOfRange(f64),
    #[error("piece spawn interval must be positive")]
    ZeroSpawnInterval,
    #[error("invalid config json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("player {player_id} is busy for another {remaining_ms} ms")]
    NotReady { player_id: PlayerId, remaining_ms: u64 },
    #[error("game is finished")]
    GameFinished,
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
    #[error("malformed event log: {0}")]
    MalformedLog(String),
}

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("result addressed to player {result_player} fed into belief of player {owner}")]
    ForeignResult { owner: PlayerId, result_player: PlayerId },
    #[error("cannot merge beliefs of players on different teams")]
    CrossTeamMerge,
}
