//! The four built-in strategies, loosely modelled on Belbin team roles.
//!
//! All of them share one base behaviour: find a piece by following discovered
//! distances, pick it up, carry it to the own goal area, map that area with
//! discoveries and place the piece on a believed goal. Roles differ only in
//! two hooks:
//!
//! | role                | tests before delivery | exchange trigger           |
//! |---------------------|-----------------------|----------------------------|
//! | Shaper              | no                    | none                       |
//! | Completer Finisher  | yes                   | none                       |
//! | Teamworker          | no                    | new goal discovered        |
//! | Monitor Evaluator   | yes                   | goal validated             |

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::KnowledgeError;
use crate::knowledge::{Belief, GoalStatus};
use crate::master::{
    ActionPayload, ActionResult, ExchangeAnswer, GameAction, ObservedGoal, PlaceOutcome, PlayerView, RejectReason,
    TestOutcome,
};
use crate::model::{area_of, manhattan, Area, Direction, GameConfig, PlayerId, Position};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Shaper,
    CompleterFinisher,
    Teamworker,
    MonitorEvaluator,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Shaper,
        StrategyKind::CompleterFinisher,
        StrategyKind::Teamworker,
        StrategyKind::MonitorEvaluator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Shaper => "shaper",
            StrategyKind::CompleterFinisher => "completer_finisher",
            StrategyKind::Teamworker => "teamworker",
            StrategyKind::MonitorEvaluator => "monitor_evaluator",
        }
    }

    /// Tests every piece before delivering it.
    pub fn tests_pieces(self) -> bool {
        matches!(self, StrategyKind::CompleterFinisher | StrategyKind::MonitorEvaluator)
    }

    /// Ever asks teammates for an information exchange.
    pub fn communicates(self) -> bool {
        matches!(self, StrategyKind::Teamworker | StrategyKind::MonitorEvaluator)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown strategy {0:?} (expected shaper, completer_finisher, teamworker or monitor_evaluator)")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyKind {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        match norm.as_str() {
            "shaper" | "s" => Ok(StrategyKind::Shaper),
            "completer_finisher" | "completerfinisher" | "cf" => Ok(StrategyKind::CompleterFinisher),
            "teamworker" | "tw" => Ok(StrategyKind::Teamworker),
            "monitor_evaluator" | "monitorevaluator" | "me" => Ok(StrategyKind::MonitorEvaluator),
            _ => Err(UnknownStrategy(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentOptions {
    /// Monitor Evaluators also exchange after discovering a new goal, i.e. the
    /// full union of the Completer Finisher and Teamworker behaviours.
    pub me_exchange_on_discovery: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentMemory {
    pub belief: Belief,
    pub pending_exchange_trigger: bool,
    cfg: GameConfig,
    options: AgentOptions,
    rng: ChaCha8Rng,
    /// Directions found occupied since the last successful move or discovery.
    blocked: Vec<Direction>,
    gradient_target: Option<Position>,
}

impl AgentMemory {
    pub fn new(cfg: GameConfig, belief: Belief, options: AgentOptions, seed: u64) -> Self {
        Self {
            belief,
            pending_exchange_trigger: false,
            cfg,
            options,
            rng: ChaCha8Rng::seed_from_u64(seed),
            blocked: Vec::new(),
            gradient_target: None,
        }
    }

    /// Merges a belief delivered by a completed exchange.
    pub fn receive_exchange(&mut self, delivered: &Belief) -> Result<(), KnowledgeError> {
        self.belief.absorb(delivered)
    }

    fn own_area(&self, me: &PlayerView) -> Area {
        me.team.goal_area()
    }

    fn in_own_area(&self, me: &PlayerView, pos: Position) -> bool {
        area_of(pos, &self.cfg).is_ok_and(|a| a == self.own_area(me))
    }

    fn step_toward(&mut self, me: &PlayerView, target: Position) -> GameAction {
        let here = manhattan(me.pos, target);
        let legal = |d: Direction| {
            me.pos
                .step(d, &self.cfg)
                .filter(|p| area_of(*p, &self.cfg).is_ok_and(|a| a != me.team.opponent().goal_area()))
        };
        let closer = Direction::ALL
            .into_iter()
            .filter(|d| !self.blocked.contains(d))
            .find(|&d| legal(d).is_some_and(|p| manhattan(p, target) < here));
        if let Some(direction) = closer {
            return GameAction::Move { direction };
        }
        let sidesteps: Vec<Direction> = Direction::ALL
            .into_iter()
            .filter(|&d| !self.blocked.contains(&d) && legal(d).is_some())
            .collect();
        match sidesteps.choose(&mut self.rng) {
            Some(&direction) => GameAction::Move { direction },
            None => GameAction::Discover,
        }
    }

    fn deliver(&mut self, kind: StrategyKind, me: &PlayerView) -> GameAction {
        if kind.tests_pieces() && !me.held_piece_tested {
            return GameAction::Test;
        }
        let area = self.own_area(me);
        let cfg = &self.cfg;
        let in_area = |p: Position| area_of(p, cfg).is_ok_and(|a| a == area);
        if self.in_own_area(me, me.pos) {
            match self.belief.goal_status(me.pos) {
                GoalStatus::Goal => return GameAction::Place,
                GoalStatus::Unknown => return GameAction::Discover,
                _ => {}
            }
        }
        let target = self
            .belief
            .nearest_known(cfg, me.pos, |p, f| {
                in_area(p) && f.is_some_and(|f| f.goal_status == GoalStatus::Goal)
            })
            .or_else(|| {
                self.belief.nearest_known(cfg, me.pos, |p, f| {
                    in_area(p) && f.is_none_or(|f| f.goal_status == GoalStatus::Unknown)
                })
            });
        match target {
            Some(t) => self.step_toward(me, t),
            None => GameAction::Discover,
        }
    }

    fn seek_piece(&mut self, me: &PlayerView) -> GameAction {
        if self.belief.distance(me.pos) == Some(0) {
            return GameAction::PickUp;
        }
        let known_piece = self
            .belief
            .nearest_known(&self.cfg, me.pos, |_, f| f.is_some_and(|f| f.distance_to_piece == Some(0)));
        if let Some(t) = known_piece {
            return self.step_toward(me, t);
        }
        match self.gradient_target {
            Some(t) if t != me.pos => self.step_toward(me, t),
            _ => {
                self.gradient_target = None;
                GameAction::Discover
            }
        }
    }
}

/// Chooses the next action for a ready player.
pub fn decide(kind: StrategyKind, mem: &mut AgentMemory, me: &PlayerView) -> GameAction {
    if mem.pending_exchange_trigger {
        mem.pending_exchange_trigger = false;
        if let Some(&target_player_id) = mem.belief.known_teammates.choose(&mut mem.rng) {
            return GameAction::ExchangeInfo { target_player_id };
        }
    }
    if me.holding {
        mem.deliver(kind, me)
    } else {
        mem.seek_piece(me)
    }
}

/// Feeds an own action result into the memory and evaluates role triggers.
pub fn on_result(kind: StrategyKind, mem: &mut AgentMemory, result: &ActionResult) -> Result<(), KnowledgeError> {
    if result.player_id != mem.belief.owner {
        return Err(KnowledgeError::ForeignResult {
            owner: mem.belief.owner,
            result_player: result.player_id,
        });
    }

    let new_goal = result.discovered().iter().any(|f| {
        f.goal_status == ObservedGoal::Goal
            && !matches!(
                mem.belief.goal_status(f.pos),
                GoalStatus::Goal | GoalStatus::CompletedGoal
            )
    });
    mem.belief.ingest_observation(result, result.submitted_at_ms)?;

    match (&result.payload, result.reject) {
        (Some(ActionPayload::Move { .. }), _) => mem.blocked.clear(),
        (None, Some(RejectReason::Occupied)) => {
            if let GameAction::Move { direction } = result.kind {
                mem.blocked.push(direction);
            }
        }
        (Some(ActionPayload::Discover { fields }), _) => {
            mem.blocked.clear();
            let best = fields.iter().filter_map(|f| f.distance_to_nearest_piece).min();
            mem.gradient_target = match best {
                Some(d) if d > 0 => {
                    let ties: Vec<Position> = fields
                        .iter()
                        .filter(|f| f.distance_to_nearest_piece == Some(d))
                        .map(|f| f.pos)
                        .collect();
                    Some(ties[mem.rng.random_range(0..ties.len())])
                }
                _ => None,
            };
        }
        (Some(ActionPayload::PickUp { .. }), _)
        | (Some(ActionPayload::Test { outcome: TestOutcome::ShamDestroyed }), _)
        | (Some(ActionPayload::Place { .. }), _) => mem.gradient_target = None,
        _ => {}
    }

    let discovery_trigger = match kind {
        StrategyKind::Teamworker => true,
        StrategyKind::MonitorEvaluator => mem.options.me_exchange_on_discovery,
        _ => false,
    };
    if discovery_trigger && new_goal {
        mem.pending_exchange_trigger = true;
    }
    if kind == StrategyKind::MonitorEvaluator && result.place_outcome() == Some(PlaceOutcome::GoalCompleted) {
        mem.pending_exchange_trigger = true;
    }
    Ok(())
}

/// All built-in strategies accept every request.
pub fn accept_exchange(_kind: StrategyKind, _mem: &AgentMemory, _from: PlayerId) -> ExchangeAnswer {
    ExchangeAnswer::Accepted
}

/// A strategy bundled with its memory and its own bookkeeping of what it
/// knows about itself. Network clients drive this directly.
#[derive(Debug, Clone)]
pub struct Agent {
    pub kind: StrategyKind,
    pub memory: AgentMemory,
    pub view: PlayerView,
}

impl Agent {
    pub fn new(kind: StrategyKind, memory: AgentMemory, view: PlayerView) -> Self {
        Self { kind, memory, view }
    }

    pub fn decide(&mut self) -> GameAction {
        decide(self.kind, &mut self.memory, &self.view)
    }

    pub fn observe(&mut self, result: &ActionResult) -> Result<(), KnowledgeError> {
        on_result(self.kind, &mut self.memory, result)?;
        self.view.pos = result.position;
        match result.payload {
            Some(ActionPayload::PickUp { .. }) => {
                self.view.holding = true;
                self.view.held_piece_tested = false;
            }
            Some(ActionPayload::Test { outcome: TestOutcome::Genuine }) => self.view.held_piece_tested = true,
            Some(ActionPayload::Test { outcome: TestOutcome::ShamDestroyed }) | Some(ActionPayload::Place { .. }) => {
                self.view.holding = false;
                self.view.held_piece_tested = false;
            }
            _ => {}
        }
        Ok(())
    }

    pub fn accept(&self, from: PlayerId) -> ExchangeAnswer {
        accept_exchange(self.kind, &self.memory, from)
    }
}
