//! Game registry and the per-game actor task.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use project_game::master::write_jsonl;
use project_game::seed::{fnv1a, mix};
use project_game::{GameAction, GameConfig, PlayerId, TeamColor};
use tokio::sync::{mpsc, oneshot};
use tokio::time::Instant;

use crate::host::{ClockMode, GameHost, Outgoing};
use crate::wire::{ErrorCode, SessionMode, WireMessage};

#[derive(Debug, Clone)]
pub struct LobbyConfig {
    pub game: GameConfig,
    pub mode: ClockMode,
    /// Finished games are written to `<dir>/<game_id>.jsonl`.
    pub log_dir: Option<PathBuf>,
    /// Games that exist from the start. When empty, any valid id creates a
    /// game on first join; otherwise unknown ids are refused.
    pub games: Vec<String>,
}

pub(crate) enum Command {
    Join {
        name: Option<String>,
        preferred: Option<TeamColor>,
        mode: SessionMode,
        accept_exchanges: bool,
        outbox: mpsc::UnboundedSender<WireMessage>,
        reply: oneshot::Sender<Result<PlayerId, WireMessage>>,
    },
    Action {
        player: PlayerId,
        action: GameAction,
    },
    Leave {
        player: PlayerId,
    },
}

#[derive(Clone)]
pub(crate) struct GameHandle {
    pub(crate) tx: mpsc::UnboundedSender<Command>,
}

#[derive(Default)]
struct Registry {
    live: HashMap<String, GameHandle>,
    finished: HashSet<String>,
}

pub struct Lobby {
    cfg: LobbyConfig,
    registry: Mutex<Registry>,
}

pub fn valid_game_id(id: &str) -> bool {
    (1..=64).contains(&id.len()) && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

impl Lobby {
    /// Must be called inside a tokio runtime when `cfg.games` is non-empty.
    pub fn new(cfg: LobbyConfig) -> Arc<Self> {
        let lobby = Arc::new(Self {
            cfg,
            registry: Mutex::new(Registry::default()),
        });
        for id in lobby.cfg.games.clone() {
            let handle = lobby.spawn_game(&id);
            lobby.registry.lock().unwrap().live.insert(id, handle);
        }
        lobby
    }

    pub fn config(&self) -> &LobbyConfig {
        &self.cfg
    }

    /// Each game id gets its own seed derived from the configured one.
    pub fn seed_for(&self, game_id: &str) -> u64 {
        mix(self.cfg.game.seed ^ fnv1a(game_id.as_bytes()))
    }

    pub fn is_finished(&self, game_id: &str) -> bool {
        self.registry.lock().unwrap().finished.contains(game_id)
    }

    pub(crate) fn lookup(self: &Arc<Self>, game_id: &str) -> Result<GameHandle, WireMessage> {
        if !valid_game_id(game_id) {
            return Err(WireMessage::error(
                ErrorCode::UnknownGame,
                "game ids are 1-64 characters of [A-Za-z0-9_-]",
            ));
        }
        let mut reg = self.registry.lock().unwrap();
        if reg.finished.contains(game_id) {
            return Err(WireMessage::error(ErrorCode::GameFinished, format!("game {game_id} is over")));
        }
        if let Some(h) = reg.live.get(game_id) {
            return Ok(h.clone());
        }
        if !self.cfg.games.is_empty() {
            return Err(WireMessage::error(ErrorCode::UnknownGame, format!("no game {game_id}")));
        }
        let handle = self.spawn_game(game_id);
        reg.live.insert(game_id.to_owned(), handle.clone());
        Ok(handle)
    }

    fn spawn_game(self: &Arc<Self>, game_id: &str) -> GameHandle {
        let cfg = GameConfig {
            seed: self.seed_for(game_id),
            ..self.cfg.game.clone()
        };
        let host = GameHost::new(game_id, cfg, self.cfg.mode).expect("config validated at startup");
        let (tx, rx) = mpsc::unbounded_channel();
        tokio::spawn(run_game(Arc::clone(self), host, rx));
        GameHandle { tx }
    }

    fn retire(&self, game_id: &str) {
        let mut reg = self.registry.lock().unwrap();
        reg.live.remove(game_id);
        reg.finished.insert(game_id.to_owned());
    }
}

async fn run_game(lobby: Arc<Lobby>, mut host: GameHost, mut rx: mpsc::UnboundedReceiver<Command>) {
    let mut outboxes: HashMap<PlayerId, mpsc::UnboundedSender<WireMessage>> = HashMap::new();
    let mut started_at: Option<Instant> = None;
    let elapsed = |since: Option<Instant>| since.map_or(0, |s| s.elapsed().as_millis() as u64);

    loop {
        let wake = match (host.mode(), started_at) {
            (ClockMode::Realtime, Some(s)) => host.next_wakeup().map(|t| s + Duration::from_millis(t)),
            _ => None,
        };
        let cmd = tokio::select! {
            cmd = rx.recv() => match cmd {
                Some(c) => Some(c),
                // unreachable while the lobby holds a handle
                None => break,
            },
            _ = sleep_until(wake) => None,
        };

        let mut out = Vec::new();
        match cmd {
            Some(Command::Join {
                name,
                preferred,
                mode,
                accept_exchanges,
                outbox,
                reply,
            }) => match host.join(name, preferred, mode, accept_exchanges) {
                Ok((id, msgs)) => {
                    outboxes.insert(id, outbox);
                    let _ = reply.send(Ok(id));
                    out = msgs;
                    if host.is_started() && started_at.is_none() {
                        started_at = Some(Instant::now());
                    }
                }
                Err(e) => {
                    let _ = reply.send(Err(e));
                }
            },
            Some(Command::Action { player, action }) => out = host.submit(player, action, elapsed(started_at)),
            Some(Command::Leave { player }) => {
                host.disconnect(player);
                outboxes.remove(&player);
            }
            None => {}
        }
        out.extend(host.pump(elapsed(started_at)));
        if host.is_over() {
            // the log is on disk before anyone hears the game is over
            if let Some(dir) = &lobby.cfg.log_dir {
                write_log(dir, &host);
            }
            lobby.retire(host.game_id());
            dispatch(&outboxes, out);
            break;
        }
        dispatch(&outboxes, out);
    }
}

async fn sleep_until(at: Option<Instant>) {
    match at {
        Some(t) => tokio::time::sleep_until(t).await,
        None => std::future::pending().await,
    }
}

fn dispatch(outboxes: &HashMap<PlayerId, mpsc::UnboundedSender<WireMessage>>, out: Vec<Outgoing>) {
    for Outgoing { to, msg } in out {
        if let Some(tx) = outboxes.get(&to) {
            let _ = tx.send(msg);
        }
    }
}

fn write_log(dir: &std::path::Path, host: &GameHost) {
    let path = dir.join(format!("{}.jsonl", host.game_id()));
    let res = std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::File::create(&path))
        .and_then(|f| write_jsonl(host.event_log(), std::io::BufWriter::new(f)));
    if let Err(e) = res {
        eprintln!("could not write {}: {e}", path.display());
    }
}
