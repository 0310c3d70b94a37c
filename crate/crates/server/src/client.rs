//! A strategy agent playing against a remote server over NDJSON/TCP.

use std::net::SocketAddr;

use project_game::master::{FinishReason, PlayerView};
use project_game::sim::agent_seed;
use project_game::{Agent, AgentMemory, AgentOptions, Belief, GameAction, PlayerId, StrategyKind, TeamColor};
use thiserror::Error;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpStream;

use crate::wire::{ErrorCode, SessionMode, WireMessage};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("server refused: {code:?}: {message}")]
    Refused { code: ErrorCode, message: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone)]
pub struct AgentClientConfig {
    pub game_id: String,
    pub name: Option<String>,
    pub kind: StrategyKind,
    pub team: Option<TeamColor>,
    pub options: AgentOptions,
    /// Seeds the agent's private decision stream together with its id.
    pub seed: u64,
    pub accept_exchanges: bool,
}

impl AgentClientConfig {
    pub fn new(game_id: impl Into<String>, kind: StrategyKind) -> Self {
        Self {
            game_id: game_id.into(),
            name: None,
            kind,
            team: None,
            options: AgentOptions::default(),
            seed: 0,
            accept_exchanges: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AgentOutcome {
    pub player_id: PlayerId,
    pub team: TeamColor,
    pub winner: Option<TeamColor>,
    pub reason: FinishReason,
    pub actions_sent: u64,
    /// Every message received, in order.
    pub transcript: Vec<WireMessage>,
}

/// Joins, plays until `game_over` and reports the outcome.
///
/// An action refused with `not_ready` (the agent was pulled into a
/// teammate's exchange) is resent once the matching `exchange_delivery`
/// arrives, since that is when the agent is free again.
pub async fn play_agent(addr: SocketAddr, cfg: AgentClientConfig) -> Result<AgentOutcome, ClientError> {
    let stream = TcpStream::connect(addr).await?;
    stream.set_nodelay(true)?;
    let (read, mut write) = stream.into_split();
    let mut lines = BufReader::new(read).lines();

    let join = WireMessage::JoinGame {
        game_id: cfg.game_id.clone(),
        name: cfg.name.clone(),
        preferred_team: cfg.team,
        mode: SessionMode::Agent,
        accept_exchanges: cfg.accept_exchanges,
    };
    send(&mut write, &join).await?;

    let mut transcript = Vec::new();
    let mut agent: Option<Agent> = None;
    let mut last_sent: Option<GameAction> = None;
    let mut parked: Option<GameAction> = None;
    let mut actions_sent = 0u64;

    while let Some(line) = lines.next_line().await? {
        let msg: WireMessage =
            serde_json::from_str(&line).map_err(|e| ClientError::Protocol(format!("{e}: {line}")))?;
        transcript.push(msg.clone());
        let next = match msg {
            WireMessage::JoinConfirmed { .. } => None,
            WireMessage::GameStarted {
                player_id,
                config,
                team,
                is_leader,
                start,
                teammates,
                ..
            } => {
                let game_cfg = config.with_seed(cfg.seed);
                let memory = AgentMemory::new(
                    game_cfg,
                    Belief::new(player_id, team, teammates),
                    cfg.options,
                    agent_seed(cfg.seed, player_id),
                );
                let view = PlayerView {
                    player_id,
                    team,
                    pos: start,
                    holding: false,
                    held_piece_tested: false,
                    is_leader,
                };
                let a = agent.insert(Agent::new(cfg.kind, memory, view));
                Some(a.decide())
            }
            WireMessage::ActionResult { result, .. } => {
                let a = agent.as_mut().ok_or_else(|| ClientError::Protocol("result before start".into()))?;
                a.observe(&result).map_err(|e| ClientError::Protocol(e.to_string()))?;
                Some(a.decide())
            }
            WireMessage::ExchangeDelivery { belief, .. } => {
                let a = agent.as_mut().ok_or_else(|| ClientError::Protocol("delivery before start".into()))?;
                a.memory
                    .receive_exchange(&belief)
                    .map_err(|e| ClientError::Protocol(e.to_string()))?;
                parked.take()
            }
            WireMessage::GameOver { winner, reason, .. } => {
                let a = agent.ok_or_else(|| ClientError::Protocol("game over before start".into()))?;
                return Ok(AgentOutcome {
                    player_id: a.view.player_id,
                    team: a.view.team,
                    winner,
                    reason,
                    actions_sent,
                    transcript,
                });
            }
            WireMessage::Error {
                code: ErrorCode::NotReady,
                ..
            } => {
                parked = last_sent;
                None
            }
            WireMessage::Error { code, message, .. } => return Err(ClientError::Refused { code, message }),
            other => return Err(ClientError::Protocol(format!("unexpected {other:?}"))),
        };
        if let Some(action) = next {
            last_sent = Some(action);
            send(
                &mut write,
                &WireMessage::ActionRequest {
                    player_id: None,
                    action,
                },
            )
            .await?;
            actions_sent += 1;
        }
    }
    Err(ClientError::Protocol("connection closed before game over".into()))
}

async fn send(write: &mut tokio::net::tcp::OwnedWriteHalf, msg: &WireMessage) -> std::io::Result<()> {
    let mut line = msg.to_json();
    line.push('\n');
    write.write_all(line.as_bytes()).await
}
