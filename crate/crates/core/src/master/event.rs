use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::action::{ActionResult, GameAction};
use crate::error::EngineError;
use crate::model::{GameConfig, PlayerId, Position, TeamColor};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub pos: Position,
    pub owner: TeamColor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerStart {
    pub player_id: PlayerId,
    pub team: TeamColor,
    pub pos: Position,
    pub is_leader: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    AllGoalsCompleted,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventRecord {
    GameInit {
        cfg: GameConfig,
        goals: Vec<GoalSpec>,
        players: Vec<PlayerStart>,
        seed: u64,
    },
    PieceSpawn {
        pos: Position,
        piece_id: u64,
        is_sham: bool,
    },
    ActionTaken {
        action: GameAction,
        result: ActionResult,
    },
    ExchangeCompleted {
        a: PlayerId,
        b: PlayerId,
        completes_at_ms: u64,
    },
    GameOver {
        winner: Option<TeamColor>,
        reason: FinishReason,
    },
}

/// One entry of the append-only game log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameEvent {
    pub seq: u64,
    pub t_ms: u64,
    pub player_id: Option<PlayerId>,
    pub record: EventRecord,
}

/// Writes one JSON document per line.
pub fn write_jsonl<W: Write>(events: &[GameEvent], mut out: W) -> std::io::Result<()> {
    for ev in events {
        serde_json::to_writer(&mut out, ev)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn to_jsonl(events: &[GameEvent]) -> String {
    let mut buf = Vec::new();
    write_jsonl(events, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits utf-8")
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<GameEvent>, EngineError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| EngineError::MalformedLog(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let ev = serde_json::from_str(&line)
            .map_err(|e| EngineError::MalformedLog(format!("line {}: {e}", i + 1)))?;
        events.push(ev);
    }
    Ok(events)
}
