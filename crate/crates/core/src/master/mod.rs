//! Authoritative rules engine and discrete-event scheduler.
//!
//! A [`GameState`] owns the full board, every player's server-side belief and
//! the append-only event log. All mutation goes through
//! [`GameState::submit_action`] and [`GameState::advance`]; simulated time only
//! moves forward inside `advance`.
//!
//! Randomness is drawn from one seeded ChaCha8 stream. During initialisation
//! the draw order is fixed: red goal fields, blue goal fields, red start
//! fields, blue start fields, initial piece fields, initial sham flags. Each
//! later spawn draws its field and then its sham flag.

mod action;
mod event;
mod replay;

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use action::{
    ActionPayload, ActionResult, DiscoveredField, ExchangeAnswer, GameAction, ObservedGoal, PlaceOutcome,
    RejectReason, TestOutcome,
};
pub use event::{read_jsonl, to_jsonl, write_jsonl, EventRecord, FinishReason, GameEvent, GoalSpec, PlayerStart};
pub use replay::replay;

use crate::error::EngineError;
use crate::knowledge::{merge, Belief};
use crate::model::{area_of, manhattan, neighborhood, Area, Direction, GameConfig, Piece, PlayerId, Position, TeamColor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerState {
    pub player_id: PlayerId,
    pub team: TeamColor,
    pub pos: Position,
    pub held_piece: Option<Piece>,
    pub held_piece_tested: bool,
    pub ready_at_ms: u64,
    pub is_leader: bool,
}

impl PlayerState {
    /// What the player itself may know about its own state.
    pub fn view(&self) -> PlayerView {
        PlayerView {
            player_id: self.player_id,
            team: self.team,
            pos: self.pos,
            holding: self.held_piece.is_some(),
            held_piece_tested: self.held_piece_tested,
            is_leader: self.is_leader,
        }
    }
}

/// Public projection of a [`PlayerState`]: no hidden piece truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerView {
    pub player_id: PlayerId,
    pub team: TeamColor,
    pub pos: Position,
    pub holding: bool,
    pub held_piece_tested: bool,
    pub is_leader: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalField {
    pub pos: Position,
    pub owner: TeamColor,
    pub completed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Running,
    Finished {
        winner: Option<TeamColor>,
        reason: FinishReason,
    },
}

/// Decides whether a target accepts an information exchange. Leaders are
/// forced to accept before the policy is consulted.
pub trait ExchangePolicy {
    fn answer(&mut self, target: PlayerId, from: PlayerId) -> ExchangeAnswer;
}

pub struct AcceptAll;

impl ExchangePolicy for AcceptAll {
    fn answer(&mut self, _target: PlayerId, _from: PlayerId) -> ExchangeAnswer {
        ExchangeAnswer::Accepted
    }
}

impl<F: FnMut(PlayerId, PlayerId) -> ExchangeAnswer> ExchangePolicy for F {
    fn answer(&mut self, target: PlayerId, from: PlayerId) -> ExchangeAnswer {
        self(target, from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    cfg: GameConfig,
    clock_ms: u64,
    players: Vec<PlayerState>,
    pieces_on_board: BTreeMap<Position, Piece>,
    goal_fields: Vec<GoalField>,
    next_spawn_at_ms: u64,
    next_piece_id: u64,
    rng: ChaCha8Rng,
    event_log: Vec<GameEvent>,
    phase: Phase,
    beliefs: Vec<Belief>,
}

struct Outcome {
    ok: bool,
    payload: Option<ActionPayload>,
    reject: Option<RejectReason>,
    exchange_with: Option<PlayerId>,
}

impl Outcome {
    fn ok(payload: ActionPayload) -> Self {
        Self {
            ok: true,
            payload: Some(payload),
            reject: None,
            exchange_with: None,
        }
    }

    fn reject(reason: RejectReason) -> Self {
        Self {
            ok: false,
            payload: None,
            reject: Some(reason),
            exchange_with: None,
        }
    }
}

impl GameState {
    pub fn init_game(cfg: GameConfig) -> Result<GameState, EngineError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

        let mut goal_fields = Vec::new();
        for team in TeamColor::BOTH {
            let area: Vec<Position> = cfg.area_positions(team.goal_area()).collect();
            for i in sample(&mut rng, area.len(), cfg.goals_per_team as usize) {
                goal_fields.push(GoalField {
                    pos: area[i],
                    owner: team,
                    completed: false,
                });
            }
        }

        let mut players = Vec::new();
        for team in TeamColor::BOTH {
            let area: Vec<Position> = cfg.area_positions(team.goal_area()).collect();
            for (k, i) in sample(&mut rng, area.len(), cfg.players_per_team as usize)
                .into_iter()
                .enumerate()
            {
                players.push(PlayerState {
                    player_id: players.len() as PlayerId,
                    team,
                    pos: area[i],
                    held_piece: None,
                    held_piece_tested: false,
                    ready_at_ms: 0,
                    is_leader: k == 0,
                });
            }
        }

        let task: Vec<Position> = cfg.area_positions(Area::TaskArea).collect();
        let piece_fields: Vec<Position> = sample(&mut rng, task.len(), cfg.initial_pieces as usize)
            .into_iter()
            .map(|i| task[i])
            .collect();
        let shams: Vec<bool> = piece_fields.iter().map(|_| rng.random_bool(cfg.risk_level)).collect();

        let beliefs = players
            .iter()
            .map(|p| {
                let mates = players
                    .iter()
                    .filter(|q| q.team == p.team && q.player_id != p.player_id)
                    .map(|q| q.player_id)
                    .collect();
                Belief::new(p.player_id, p.team, mates)
            })
            .collect();

        let mut state = GameState {
            next_spawn_at_ms: cfg.piece_spawn_interval_ms,
            cfg,
            clock_ms: 0,
            players,
            pieces_on_board: BTreeMap::new(),
            goal_fields,
            next_piece_id: 0,
            rng,
            event_log: Vec::new(),
            phase: Phase::Running,
            beliefs,
        };

        let init = EventRecord::GameInit {
            cfg: state.cfg.clone(),
            goals: state
                .goal_fields
                .iter()
                .map(|g| GoalSpec {
                    pos: g.pos,
                    owner: g.owner,
                })
                .collect(),
            players: state
                .players
                .iter()
                .map(|p| PlayerStart {
                    player_id: p.player_id,
                    team: p.team,
                    pos: p.pos,
                    is_leader: p.is_leader,
                })
                .collect(),
            seed: state.cfg.seed,
        };
        state.log(None, init);
        for (pos, is_sham) in piece_fields.into_iter().zip(shams) {
            state.put_piece(pos, is_sham);
        }
        Ok(state)
    }

    pub fn cfg(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn clock_ms(&self) -> u64 {
        self.clock_ms
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.phase, Phase::Finished { .. })
    }

    pub fn winner(&self) -> Option<TeamColor> {
        match self.phase {
            Phase::Finished { winner, .. } => winner,
            Phase::Running => None,
        }
    }

    pub fn players(&self) -> &[PlayerState] {
        &self.players
    }

    pub fn player(&self, id: PlayerId) -> Option<&PlayerState> {
        self.players.get(id as usize)
    }

    pub fn pieces_on_board(&self) -> &BTreeMap<Position, Piece> {
        &self.pieces_on_board
    }

    pub fn goal_fields(&self) -> &[GoalField] {
        &self.goal_fields
    }

    pub fn goals_of(&self, team: TeamColor) -> impl Iterator<Item = &GoalField> {
        self.goal_fields.iter().filter(move |g| g.owner == team)
    }

    pub fn next_spawn_at_ms(&self) -> u64 {
        self.next_spawn_at_ms
    }

    pub fn event_log(&self) -> &[GameEvent] {
        &self.event_log
    }

    pub fn into_event_log(self) -> Vec<GameEvent> {
        self.event_log
    }

    /// Server-side belief of a player, kept in sync with its own results and
    /// completed exchanges.
    pub fn belief(&self, id: PlayerId) -> Option<&Belief> {
        self.beliefs.get(id as usize)
    }

    /// Players whose `ready_at_ms` has been reached, by ascending id.
    pub fn ready_players(&self) -> impl Iterator<Item = PlayerId> + '_ {
        self.players
            .iter()
            .filter(|p| p.ready_at_ms <= self.clock_ms)
            .map(|p| p.player_id)
    }

    pub fn submit_action(&mut self, player_id: PlayerId, action: GameAction) -> Result<ActionResult, EngineError> {
        self.submit_action_with(player_id, action, &mut AcceptAll)
    }

    /// Validates and applies one action. The configured cost is charged
    /// whether or not the action succeeds.
    pub fn submit_action_with(
        &mut self,
        player_id: PlayerId,
        action: GameAction,
        policy: &mut dyn ExchangePolicy,
    ) -> Result<ActionResult, EngineError> {
        if self.is_finished() {
            return Err(EngineError::GameFinished);
        }
        let idx = player_id as usize;
        let player = self.players.get(idx).ok_or(EngineError::UnknownPlayer(player_id))?;
        if player.ready_at_ms > self.clock_ms {
            return Err(EngineError::NotReady {
                player_id,
                remaining_ms: player.ready_at_ms - self.clock_ms,
            });
        }

        let now = self.clock_ms;
        let cost = self.cfg.cost_of(&action);
        let outcome = match action {
            GameAction::Move { direction } => self.handle_move(idx, direction),
            GameAction::Discover => self.handle_discover(idx),
            GameAction::PickUp => self.handle_pickup(idx),
            GameAction::Test => self.handle_test(idx),
            GameAction::Place => self.handle_place(idx),
            GameAction::ExchangeInfo { target_player_id } => self.handle_exchange(idx, target_player_id, policy),
        };
        self.players[idx].ready_at_ms = now + cost;

        let result = ActionResult {
            player_id,
            ok: outcome.ok,
            kind: action,
            submitted_at_ms: now,
            completed_at_ms: now + cost,
            position: self.players[idx].pos,
            payload: outcome.payload,
            reject: outcome.reject,
        };
        self.beliefs[idx]
            .ingest_observation(&result, now)
            .expect("server belief is indexed by player id");
        self.log(
            Some(player_id),
            EventRecord::ActionTaken {
                action,
                result: result.clone(),
            },
        );

        if let Some(target) = outcome.exchange_with {
            let t = target as usize;
            let ready = &mut self.players[t].ready_at_ms;
            *ready = (*ready).max(now) + self.cfg.exchange_cost_ms;
            let (a, b) = merge(&self.beliefs[idx], &self.beliefs[t]).expect("exchange partners share a team");
            self.beliefs[idx] = a;
            self.beliefs[t] = b;
            self.log(
                Some(player_id),
                EventRecord::ExchangeCompleted {
                    a: player_id,
                    b: target,
                    completes_at_ms: now + self.cfg.exchange_cost_ms,
                },
            );
        }

        self.check_winner();
        Ok(result)
    }

    fn handle_move(&mut self, idx: usize, dir: Direction) -> Outcome {
        let me = &self.players[idx];
        let Some(target) = me.pos.step(dir, &self.cfg) else {
            return Outcome::reject(RejectReason::OffBoard);
        };
        let area = area_of(target, &self.cfg).expect("step stays on board");
        if area == me.team.opponent().goal_area() {
            return Outcome::reject(RejectReason::OpponentGoalArea);
        }
        if self.players.iter().any(|p| p.pos == target) {
            return Outcome::reject(RejectReason::Occupied);
        }
        self.players[idx].pos = target;
        Outcome::ok(ActionPayload::Move { pos: target })
    }

    fn handle_discover(&mut self, idx: usize) -> Outcome {
        let me = &self.players[idx];
        let own_area = me.team.goal_area();
        let fields = neighborhood(me.pos, &self.cfg)
            .into_iter()
            .map(|pos| {
                let distance = self.pieces_on_board.keys().map(|&p| manhattan(p, pos)).min();
                let in_own_area = area_of(pos, &self.cfg).is_ok_and(|a| a == own_area);
                let goal_status = if !in_own_area {
                    ObservedGoal::NotVisible
                } else {
                    match self.goal_fields.iter().find(|g| g.pos == pos) {
                        Some(g) if g.completed => ObservedGoal::CompletedGoal,
                        Some(_) => ObservedGoal::Goal,
                        None => ObservedGoal::NoGoal,
                    }
                };
                DiscoveredField {
                    pos,
                    distance_to_nearest_piece: distance,
                    goal_status,
                }
            })
            .collect();
        Outcome::ok(ActionPayload::Discover { fields })
    }

    fn handle_pickup(&mut self, idx: usize) -> Outcome {
        let pos = self.players[idx].pos;
        if self.players[idx].held_piece.is_some() {
            return Outcome::reject(RejectReason::HandsFull);
        }
        let Some(piece) = self.pieces_on_board.remove(&pos) else {
            return Outcome::reject(RejectReason::NoPieceHere);
        };
        let me = &mut self.players[idx];
        me.held_piece = Some(piece);
        me.held_piece_tested = false;
        Outcome::ok(ActionPayload::PickUp { piece_id: piece.id })
    }

    fn handle_test(&mut self, idx: usize) -> Outcome {
        let me = &mut self.players[idx];
        let Some(piece) = me.held_piece else {
            return Outcome::reject(RejectReason::NoPieceHeld);
        };
        let outcome = if piece.is_sham {
            me.held_piece = None;
            me.held_piece_tested = false;
            TestOutcome::ShamDestroyed
        } else {
            me.held_piece_tested = true;
            TestOutcome::Genuine
        };
        Outcome::ok(ActionPayload::Test { outcome })
    }

    fn handle_place(&mut self, idx: usize) -> Outcome {
        let (pos, team, piece) = {
            let me = &self.players[idx];
            (me.pos, me.team, me.held_piece)
        };
        let Some(piece) = piece else {
            return Outcome::reject(RejectReason::NoPieceHeld);
        };
        if area_of(pos, &self.cfg).ok() != Some(team.goal_area()) {
            return Outcome::reject(RejectReason::NotInGoalArea);
        }
        let me = &mut self.players[idx];
        me.held_piece = None;
        me.held_piece_tested = false;
        let outcome = if piece.is_sham {
            PlaceOutcome::ShamWasted
        } else {
            match self
                .goal_fields
                .iter_mut()
                .find(|g| g.pos == pos && g.owner == team && !g.completed)
            {
                Some(goal) => {
                    goal.completed = true;
                    PlaceOutcome::GoalCompleted
                }
                None => PlaceOutcome::NotAGoal,
            }
        };
        Outcome::ok(ActionPayload::Place { outcome })
    }

    fn handle_exchange(&mut self, idx: usize, target: PlayerId, policy: &mut dyn ExchangePolicy) -> Outcome {
        let me = &self.players[idx];
        let Some(other) = self.players.get(target as usize) else {
            return Outcome::reject(RejectReason::UnknownTarget);
        };
        if other.player_id == me.player_id {
            return Outcome::reject(RejectReason::SelfExchange);
        }
        if other.team != me.team {
            return Outcome::reject(RejectReason::NotTeammate);
        }
        let answer = if me.is_leader || other.is_leader {
            ExchangeAnswer::Accepted
        } else {
            policy.answer(target, me.player_id)
        };
        let mut out = Outcome::ok(ActionPayload::ExchangeInfo { answer });
        if answer == ExchangeAnswer::Accepted {
            out.exchange_with = Some(target);
        }
        out
    }

    /// Declares a winner once one team has completed all of its goals.
    pub fn check_winner(&mut self) -> Option<TeamColor> {
        if let Phase::Finished { winner, .. } = self.phase {
            return winner;
        }
        let winner = TeamColor::BOTH.into_iter().find(|&team| {
            self.goals_of(team).filter(|g| g.completed).count() == self.cfg.goals_per_team as usize
        })?;
        self.finish(Some(winner), FinishReason::AllGoalsCompleted);
        Some(winner)
    }

    /// Moves the clock to the next pending timestamp: the next spawn, the
    /// earliest future `ready_at_ms`, or the time cap. Players already ready
    /// are not waited for.
    pub fn advance(&mut self) -> Result<Vec<GameEvent>, EngineError> {
        if self.is_finished() {
            return Err(EngineError::GameFinished);
        }
        let next_ready = self
            .players
            .iter()
            .map(|p| p.ready_at_ms)
            .filter(|&t| t > self.clock_ms)
            .min()
            .unwrap_or(u64::MAX);
        let target = self.next_spawn_at_ms.min(next_ready);
        self.advance_until(target)
    }

    /// Runs every spawn due at or before `t` (capped at the game time limit)
    /// and sets the clock to `t`.
    pub fn advance_until(&mut self, t: u64) -> Result<Vec<GameEvent>, EngineError> {
        if self.is_finished() {
            return Err(EngineError::GameFinished);
        }
        let start = self.event_log.len();
        let t = t.min(self.cfg.max_game_time_ms);
        while self.next_spawn_at_ms <= t {
            self.clock_ms = self.clock_ms.max(self.next_spawn_at_ms);
            self.spawn_piece();
            self.next_spawn_at_ms += self.cfg.piece_spawn_interval_ms;
        }
        self.clock_ms = self.clock_ms.max(t);
        if self.clock_ms >= self.cfg.max_game_time_ms {
            self.finish(None, FinishReason::Timeout);
        }
        Ok(self.event_log[start..].to_vec())
    }

    fn spawn_piece(&mut self) {
        let empty: Vec<Position> = self
            .cfg
            .area_positions(Area::TaskArea)
            .filter(|p| !self.pieces_on_board.contains_key(p))
            .collect();
        if empty.is_empty() {
            return;
        }
        let pos = empty[self.rng.random_range(0..empty.len())];
        let is_sham = self.rng.random_bool(self.cfg.risk_level);
        self.put_piece(pos, is_sham);
    }

    fn put_piece(&mut self, pos: Position, is_sham: bool) {
        let piece = Piece {
            id: self.next_piece_id,
            is_sham,
        };
        self.next_piece_id += 1;
        self.pieces_on_board.insert(pos, piece);
        self.log(
            None,
            EventRecord::PieceSpawn {
                pos,
                piece_id: piece.id,
                is_sham,
            },
        );
    }

    fn finish(&mut self, winner: Option<TeamColor>, reason: FinishReason) {
        self.phase = Phase::Finished { winner, reason };
        self.log(None, EventRecord::GameOver { winner, reason });
    }

    fn log(&mut self, player_id: Option<PlayerId>, record: EventRecord) {
        self.event_log.push(GameEvent {
            seq: self.event_log.len() as u64,
            t_ms: self.clock_ms,
            player_id,
            record,
        });
    }
}

#[cfg(test)]
mod tests;
