use serde::{Deserialize, Serialize};

use crate::model::{Direction, PlayerId, Position};

/// One player action. Each variant is charged exactly one cost field of
/// [`GameConfig`](crate::model::GameConfig).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GameAction {
    Move { direction: Direction },
    Discover,
    PickUp,
    Test,
    Place,
    ExchangeInfo { target_player_id: PlayerId },
}

impl GameAction {
    pub fn name(&self) -> &'static str {
        match self {
            GameAction::Move { .. } => "move",
            GameAction::Discover => "discover",
            GameAction::PickUp => "pick_up",
            GameAction::Test => "test",
            GameAction::Place => "place",
            GameAction::ExchangeInfo { .. } => "exchange_info",
        }
    }
}

/// Goal information reported by a discovery for one field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservedGoal {
    Goal,
    NoGoal,
    CompletedGoal,
    /// Field outside the discovering player's own goal area.
    NotVisible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveredField {
    pub pos: Position,
    pub distance_to_nearest_piece: Option<u32>,
    pub goal_status: ObservedGoal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestOutcome {
    Genuine,
    ShamDestroyed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceOutcome {
    GoalCompleted,
    NotAGoal,
    ShamWasted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeAnswer {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    OffBoard,
    OpponentGoalArea,
    Occupied,
    HandsFull,
    NoPieceHere,
    NoPieceHeld,
    NotInGoalArea,
    NotTeammate,
    SelfExchange,
    UnknownTarget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ActionPayload {
    Move { pos: Position },
    Discover { fields: Vec<DiscoveredField> },
    PickUp { piece_id: u64 },
    Test { outcome: TestOutcome },
    Place { outcome: PlaceOutcome },
    ExchangeInfo { answer: ExchangeAnswer },
}

/// Outcome of a submitted action as seen by the acting player.
///
/// Observations describe the board at `submitted_at_ms`; the actor is busy
/// until `completed_at_ms`. `position` is the actor's field once the action
/// completed. A rejected action has `ok == false`, a `reject` reason and no
/// payload; its cost is still charged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionResult {
    pub player_id: PlayerId,
    pub ok: bool,
    pub kind: GameAction,
    /// Simulated time at which the action was submitted and observed.
    pub submitted_at_ms: u64,
    pub completed_at_ms: u64,
    pub position: Position,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<ActionPayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reject: Option<RejectReason>,
}

impl ActionResult {
    pub fn discovered(&self) -> &[DiscoveredField] {
        match &self.payload {
            Some(ActionPayload::Discover { fields }) => fields,
            _ => &[],
        }
    }

    pub fn test_outcome(&self) -> Option<TestOutcome> {
        match self.payload {
            Some(ActionPayload::Test { outcome }) => Some(outcome),
            _ => None,
        }
    }

    pub fn place_outcome(&self) -> Option<PlaceOutcome> {
        match self.payload {
            Some(ActionPayload::Place { outcome }) => Some(outcome),
            _ => None,
        }
    }

    pub fn exchange_answer(&self) -> Option<ExchangeAnswer> {
        match self.payload {
            Some(ActionPayload::ExchangeInfo { answer }) => Some(answer),
            _ => None,
        }
    }
}
