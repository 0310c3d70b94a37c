//! Network front end for the Project Game: hosts games for remote players
//! over WebSocket (`/ws`) or newline-delimited JSON on TCP, optionally
//! serving a static web client from the same HTTP listener.

pub mod client;
pub mod host;
pub mod lobby;
pub mod net;
pub mod wire;

pub use client::{play_agent, AgentClientConfig, AgentOutcome, ClientError};
pub use host::{ClockMode, GameHost, Outgoing};
pub use lobby::{Lobby, LobbyConfig};
pub use net::{router, start, RunningServer, ServerOptions};
pub use wire::{ErrorCode, PublicConfig, SessionMode, WireMessage};
