//! Per-player fog-of-war beliefs and the merge used by information exchange.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::KnowledgeError;
use crate::master::{ActionPayload, ActionResult, ObservedGoal, PlaceOutcome};
use crate::model::{manhattan, GameConfig, PlayerId, Position, TeamColor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalStatus {
    #[default]
    Unknown,
    Goal,
    NoGoal,
    CompletedGoal,
}

impl From<ObservedGoal> for GoalStatus {
    fn from(o: ObservedGoal) -> Self {
        match o {
            ObservedGoal::Goal => GoalStatus::Goal,
            ObservedGoal::NoGoal => GoalStatus::NoGoal,
            ObservedGoal::CompletedGoal => GoalStatus::CompletedGoal,
            ObservedGoal::NotVisible => GoalStatus::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldBelief {
    pub last_seen_ms: u64,
    pub distance_to_piece: Option<u32>,
    pub goal_status: GoalStatus,
}

impl FieldBelief {
    fn seen_at(t: u64) -> Self {
        Self {
            last_seen_ms: t,
            distance_to_piece: None,
            goal_status: GoalStatus::Unknown,
        }
    }
}

/// A player's timestamped partial view of the board.
///
/// Entries exist only for fields the owner observed or received through an
/// exchange. On the wire the field map is keyed by `"x,y"` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Belief {
    pub owner: PlayerId,
    pub team: TeamColor,
    #[serde(with = "position_map")]
    pub fields: BTreeMap<Position, FieldBelief>,
    pub known_teammates: Vec<PlayerId>,
}

impl Belief {
    pub fn new(owner: PlayerId, team: TeamColor, known_teammates: Vec<PlayerId>) -> Self {
        Self {
            owner,
            team,
            fields: BTreeMap::new(),
            known_teammates,
        }
    }

    pub fn get(&self, pos: Position) -> Option<&FieldBelief> {
        self.fields.get(&pos)
    }

    pub fn goal_status(&self, pos: Position) -> GoalStatus {
        self.fields.get(&pos).map_or(GoalStatus::Unknown, |f| f.goal_status)
    }

    pub fn distance(&self, pos: Position) -> Option<u32> {
        self.fields.get(&pos).and_then(|f| f.distance_to_piece)
    }

    /// Folds one of the owner's own action results into the belief.
    ///
    /// Discover writes distance and goal information for the sensed fields,
    /// Place updates the goal status of the placement field (a wasted sham
    /// reveals nothing), and PickUp forgets the piece estimate of the current
    /// field whether or not a piece was there.
    pub fn ingest_observation(&mut self, result: &ActionResult, t: u64) -> Result<(), KnowledgeError> {
        if result.player_id != self.owner {
            return Err(KnowledgeError::ForeignResult {
                owner: self.owner,
                result_player: result.player_id,
            });
        }
        match (&result.payload, result.kind) {
            (Some(ActionPayload::Discover { fields }), _) => {
                for f in fields {
                    self.fields.insert(
                        f.pos,
                        FieldBelief {
                            last_seen_ms: t,
                            distance_to_piece: f.distance_to_nearest_piece,
                            goal_status: f.goal_status.into(),
                        },
                    );
                }
            }
            (Some(ActionPayload::Place { outcome }), _) => {
                let status = match outcome {
                    PlaceOutcome::GoalCompleted => GoalStatus::CompletedGoal,
                    PlaceOutcome::NotAGoal => GoalStatus::NoGoal,
                    PlaceOutcome::ShamWasted => return Ok(()),
                };
                let entry = self
                    .fields
                    .entry(result.position)
                    .or_insert_with(|| FieldBelief::seen_at(t));
                entry.goal_status = status;
                entry.last_seen_ms = entry.last_seen_ms.max(t);
            }
            (_, crate::master::GameAction::PickUp) => {
                let entry = self
                    .fields
                    .entry(result.position)
                    .or_insert_with(|| FieldBelief::seen_at(t));
                entry.distance_to_piece = None;
                entry.last_seen_ms = entry.last_seen_ms.max(t);
            }
            _ => {}
        }
        Ok(())
    }

    /// Adopts every record of `other` that is strictly newer than ours.
    pub fn absorb(&mut self, other: &Belief) -> Result<(), KnowledgeError> {
        if self.team != other.team {
            return Err(KnowledgeError::CrossTeamMerge);
        }
        for (&pos, theirs) in &other.fields {
            match self.fields.get(&pos) {
                Some(ours) if ours.last_seen_ms >= theirs.last_seen_ms => {}
                _ => {
                    self.fields.insert(pos, *theirs);
                }
            }
        }
        Ok(())
    }

    /// Nearest position (Manhattan, ties row-major) satisfying `pred`, which
    /// sees every on-board field together with its belief entry if any.
    pub fn nearest_known<F>(&self, cfg: &GameConfig, from: Position, mut pred: F) -> Option<Position>
    where
        F: FnMut(Position, Option<&FieldBelief>) -> bool,
    {
        let mut best: Option<(u32, Position)> = None;
        for pos in cfg.positions() {
            if !pred(pos, self.fields.get(&pos)) {
                continue;
            }
            let d = manhattan(from, pos);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, pos));
            }
        }
        best.map(|(_, p)| p)
    }
}

/// Mutual exchange: each side keeps, per field, the record with the larger
/// `last_seen_ms` (its own on ties).
pub fn merge(a: &Belief, b: &Belief) -> Result<(Belief, Belief), KnowledgeError> {
    let mut left = a.clone();
    let mut right = b.clone();
    left.absorb(b)?;
    right.absorb(a)?;
    Ok((left, right))
}

mod position_map {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::FieldBelief;
    use crate::model::Position;

    pub fn serialize<S: Serializer>(map: &BTreeMap<Position, FieldBelief>, s: S) -> Result<S::Ok, S::Error> {
        let keyed: BTreeMap<String, &FieldBelief> = map.iter().map(|(p, f)| (p.to_string(), f)).collect();
        keyed.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Position, FieldBelief>, D::Error> {
        let keyed = BTreeMap::<String, FieldBelief>::deserialize(d)?;
        keyed
            .into_iter()
            .map(|(k, v)| k.parse::<Position>().map(|p| (p, v)).map_err(D::Error::custom))
            .collect()
    }
}
