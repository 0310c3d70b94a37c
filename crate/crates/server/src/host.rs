//! Synchronous core of one hosted game: seat assignment, action routing and
//! time-ordered delivery of results. Transport-free, so it can be driven by a
//! test as easily as by the network actor.
//!
//! Two clock modes:
//! * **realtime** — the engine clock follows the wall clock (milliseconds
//!   since the game started) and each result is withheld until its cost has
//!   elapsed, so the delay *is* the cost;
//! * **fasttime** — the clock is virtual and runs in lockstep: it only moves
//!   when every connected, ready player has an action in flight.

use std::collections::BTreeMap;

use project_game::master::{EventRecord, ExchangeAnswer, GameEvent, GameState};
use project_game::metrics::compute_profile;
use project_game::{EngineError, GameAction, GameConfig, PlayerId, TeamColor};

use crate::wire::{AreaBounds, ErrorCode, PublicConfig, SessionMode, WireMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    #[default]
    Realtime,
    Fasttime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub to: PlayerId,
    pub msg: WireMessage,
}

#[derive(Debug, Clone, Default)]
struct Seat {
    joined: bool,
    name: Option<String>,
    mode: SessionMode,
    accept_exchanges: bool,
    connected: bool,
    /// An action result is queued but not yet delivered.
    in_flight: bool,
}

#[derive(Debug)]
struct Queued {
    to: PlayerId,
    msg: WireMessage,
    completes_action: bool,
}

#[derive(Debug)]
pub struct GameHost {
    game_id: String,
    mode: ClockMode,
    state: GameState,
    seats: Vec<Seat>,
    started: bool,
    over_sent: bool,
    /// Keyed by (delivery time, insertion order).
    queue: BTreeMap<(u64, u64), Queued>,
    next_seq: u64,
}

impl GameHost {
    pub fn new(game_id: impl Into<String>, cfg: GameConfig, mode: ClockMode) -> Result<Self, EngineError> {
        let state = GameState::init_game(cfg)?;
        let seats = vec![Seat::default(); state.players().len()];
        Ok(Self {
            game_id: game_id.into(),
            mode,
            state,
            seats,
            started: false,
            over_sent: false,
            queue: BTreeMap::new(),
            next_seq: 0,
        })
    }

    pub fn game_id(&self) -> &str {
        &self.game_id
    }

    pub fn mode(&self) -> ClockMode {
        self.mode
    }

    pub fn is_started(&self) -> bool {
        self.started
    }

    /// True once `game_over` has been handed out.
    pub fn is_over(&self) -> bool {
        self.over_sent
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn event_log(&self) -> &[GameEvent] {
        self.state.event_log()
    }

    pub fn player_name(&self, id: PlayerId) -> Option<&str> {
        self.seats.get(id as usize)?.name.as_deref()
    }

    pub fn session_mode(&self, id: PlayerId) -> Option<SessionMode> {
        self.seats.get(id as usize).map(|s| s.mode)
    }

    pub fn team_of(&self, id: PlayerId) -> TeamColor {
        self.state.players()[id as usize].team
    }

    fn free_seat(&self, team: TeamColor) -> Option<PlayerId> {
        self.state
            .players()
            .iter()
            .find(|p| p.team == team && !self.seats[p.player_id as usize].joined)
            .map(|p| p.player_id)
    }

    /// Seats a new player on the preferred team, or on the other one when it
    /// is full. Without a preference the emptier team is used, red on ties.
    pub fn join(
        &mut self,
        name: Option<String>,
        preferred: Option<TeamColor>,
        mode: SessionMode,
        accept_exchanges: bool,
    ) -> Result<(PlayerId, Vec<Outgoing>), WireMessage> {
        if self.state.is_finished() {
            return Err(WireMessage::error(ErrorCode::GameFinished, "game is over"));
        }
        let first = preferred.unwrap_or_else(|| {
            let joined = |t| {
                self.state
                    .players()
                    .iter()
                    .filter(|p| p.team == t && self.seats[p.player_id as usize].joined)
                    .count()
            };
            if joined(TeamColor::Blue) < joined(TeamColor::Red) {
                TeamColor::Blue
            } else {
                TeamColor::Red
            }
        });
        let id = self
            .free_seat(first)
            .or_else(|| self.free_seat(first.opponent()))
            .ok_or_else(|| WireMessage::error(ErrorCode::GameFull, format!("game {} is full", self.game_id)))?;

        self.seats[id as usize] = Seat {
            joined: true,
            name,
            mode,
            accept_exchanges,
            connected: true,
            in_flight: false,
        };
        let p = &self.state.players()[id as usize];
        let mut out = vec![Outgoing {
            to: id,
            msg: WireMessage::JoinConfirmed {
                game_id: self.game_id.clone(),
                player_id: id,
                team: p.team,
                is_leader: p.is_leader,
            },
        }];
        if self.seats.iter().all(|s| s.joined) {
            self.started = true;
            out.extend(self.start_messages());
        }
        Ok((id, out))
    }

    fn start_messages(&self) -> Vec<Outgoing> {
        let cfg = self.state.cfg();
        let public = PublicConfig::from(cfg);
        self.state
            .players()
            .iter()
            .map(|p| Outgoing {
                to: p.player_id,
                msg: WireMessage::GameStarted {
                    game_id: self.game_id.clone(),
                    player_id: p.player_id,
                    t_ms: self.state.clock_ms(),
                    config: Box::new(public.clone()),
                    team: p.team,
                    is_leader: p.is_leader,
                    start: p.pos,
                    goal_area: AreaBounds::of(cfg, p.team.goal_area()),
                    teammates: self
                        .state
                        .players()
                        .iter()
                        .filter(|q| q.team == p.team && q.player_id != p.player_id)
                        .map(|q| q.player_id)
                        .collect(),
                },
            })
            .collect()
    }

    /// Routes one action. Errors come back immediately; results are queued
    /// and released by [`GameHost::pump`].
    pub fn submit(&mut self, player: PlayerId, action: GameAction, now_ms: u64) -> Vec<Outgoing> {
        let reply = |msg| vec![Outgoing { to: player, msg }];
        if !self.started {
            return reply(WireMessage::error(ErrorCode::NotStarted, "waiting for players"));
        }
        if self.state.is_finished() {
            return reply(WireMessage::error(ErrorCode::GameFinished, "game is over"));
        }
        if self.mode == ClockMode::Realtime && now_ms > self.state.clock_ms() {
            if let Err(e) = self.state.advance_until(now_ms) {
                return reply(engine_error(e));
            }
            if self.state.is_finished() {
                return reply(WireMessage::error(ErrorCode::GameFinished, "game is over"));
            }
        }

        let seats = &self.seats;
        let mut policy = |target: PlayerId, _from: PlayerId| {
            if seats.get(target as usize).is_some_and(|s| s.accept_exchanges) {
                ExchangeAnswer::Accepted
            } else {
                ExchangeAnswer::Rejected
            }
        };
        let result = match self.state.submit_action_with(player, action, &mut policy) {
            Ok(r) => r,
            Err(e) => return reply(engine_error(e)),
        };

        self.seats[player as usize].in_flight = true;
        if let GameAction::ExchangeInfo { target_player_id } = action {
            if result.exchange_answer() == Some(ExchangeAnswer::Accepted) {
                // each party hears about the merge when it is free again
                for (id, with, at) in [
                    (player, target_player_id, result.completed_at_ms),
                    (
                        target_player_id,
                        player,
                        self.state.players()[target_player_id as usize].ready_at_ms,
                    ),
                ] {
                    let belief = self.state.belief(id).expect("exchange party exists").clone();
                    self.enqueue(
                        at,
                        id,
                        WireMessage::ExchangeDelivery {
                            game_id: self.game_id.clone(),
                            player_id: id,
                            t_ms: at,
                            with,
                            belief,
                        },
                        false,
                    );
                }
            }
        }
        let at = result.completed_at_ms;
        self.enqueue(
            at,
            player,
            WireMessage::ActionResult {
                game_id: self.game_id.clone(),
                player_id: player,
                t_ms: at,
                result,
            },
            true,
        );
        Vec::new()
    }

    fn enqueue(&mut self, at: u64, to: PlayerId, msg: WireMessage, completes_action: bool) {
        self.queue.insert(
            (at, self.next_seq),
            Queued {
                to,
                msg,
                completes_action,
            },
        );
        self.next_seq += 1;
    }

    pub fn disconnect(&mut self, player: PlayerId) {
        if let Some(s) = self.seats.get_mut(player as usize) {
            s.connected = false;
        }
    }

    pub fn is_connected(&self, player: PlayerId) -> bool {
        self.seats.get(player as usize).is_some_and(|s| s.connected)
    }

    /// A connected player the lockstep clock is waiting for.
    fn awaiting(&self, id: PlayerId) -> bool {
        let s = &self.seats[id as usize];
        s.connected && !s.in_flight && self.state.players()[id as usize].ready_at_ms <= self.state.clock_ms()
    }

    fn release_until(&mut self, t: u64, out: &mut Vec<Outgoing>) {
        while let Some(entry) = self.queue.first_entry() {
            if entry.key().0 > t {
                break;
            }
            let q = entry.remove();
            let seat = &mut self.seats[q.to as usize];
            if q.completes_action {
                seat.in_flight = false;
            }
            if seat.connected {
                out.push(Outgoing { to: q.to, msg: q.msg });
            }
        }
    }

    /// Moves time forward and returns every message now due. `now_ms` is the
    /// wall-clock time since the start in realtime mode and ignored otherwise.
    pub fn pump(&mut self, now_ms: u64) -> Vec<Outgoing> {
        let mut out = Vec::new();
        if !self.started || self.over_sent {
            return out;
        }
        match self.mode {
            ClockMode::Realtime => {
                if !self.state.is_finished() && now_ms > self.state.clock_ms() {
                    self.state.advance_until(now_ms).expect("game is running");
                }
                self.release_until(now_ms, &mut out);
            }
            ClockMode::Fasttime => loop {
                self.release_until(self.state.clock_ms(), &mut out);
                if self.state.is_finished() {
                    break;
                }
                let ids = 0..self.seats.len() as PlayerId;
                if ids.clone().any(|id| self.awaiting(id)) {
                    break;
                }
                if !ids.clone().any(|id| self.is_connected(id)) {
                    let end = self.state.cfg().max_game_time_ms;
                    self.state.advance_until(end).expect("game is running");
                    continue;
                }
                self.state.advance().expect("game is running");
            },
        }
        if self.state.is_finished() {
            self.release_until(u64::MAX, &mut out);
            out.extend(self.game_over_messages());
            self.over_sent = true;
        }
        out
    }

    fn game_over_messages(&self) -> Vec<Outgoing> {
        let Some(GameEvent {
            t_ms,
            record: EventRecord::GameOver { winner, reason },
            ..
        }) = self.state.event_log().last()
        else {
            unreachable!("finished games end with game_over");
        };
        let log = self.state.event_log();
        (0..self.seats.len() as PlayerId)
            .filter(|&id| self.is_connected(id))
            .map(|id| Outgoing {
                to: id,
                msg: WireMessage::GameOver {
                    game_id: self.game_id.clone(),
                    t_ms: *t_ms,
                    winner: *winner,
                    reason: *reason,
                    profile: compute_profile(log, id).ok().map(Box::new),
                },
            })
            .collect()
    }

    /// Realtime mode: the next instant at which [`GameHost::pump`] has work.
    pub fn next_wakeup(&self) -> Option<u64> {
        if !self.started || self.over_sent {
            return None;
        }
        if self.state.is_finished() {
            return Some(self.state.clock_ms());
        }
        let due = self.queue.keys().next().map(|k| k.0);
        let spawn = self.state.next_spawn_at_ms();
        let end = self.state.cfg().max_game_time_ms;
        Some(due.into_iter().chain([spawn, end]).min().expect("non-empty"))
    }
}

fn engine_error(e: EngineError) -> WireMessage {
    match e {
        EngineError::NotReady { remaining_ms, .. } => WireMessage::Error {
            code: ErrorCode::NotReady,
            message: e.to_string(),
            remaining_ms: Some(remaining_ms),
        },
        EngineError::GameFinished => WireMessage::error(ErrorCode::GameFinished, e.to_string()),
        EngineError::UnknownPlayer(_) => WireMessage::error(ErrorCode::WrongPlayer, e.to_string()),
        other => WireMessage::error(ErrorCode::Parse, other.to_string()),
    }
}
