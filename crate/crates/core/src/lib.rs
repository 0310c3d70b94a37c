//! Simulator for the Project Game: two teams gather resources on a
//! fog-of-war board, optionally test them, and deliver them to hidden goal
//! fields. The first team to validate all of its goals with genuine pieces
//! wins.
//!
//! * [`model`]: board geometry and configuration
//! * [`master`]: the authoritative rules engine and its event log
//! * [`knowledge`]: per-player beliefs and exchange merging
//! * [`agents`]: the four built-in strategies
//! * [`sim`]: in-process game loop
//! * [`harness`]: strategy-pair tournaments and reporting
//! * [`metrics`]: per-player behavioural profiles from event logs

pub mod agents;
pub mod error;
pub mod harness;
pub mod knowledge;
pub mod master;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod sim;

pub use agents::{Agent, AgentMemory, AgentOptions, StrategyKind};
pub use error::{ConfigError, EngineError, GeometryError, KnowledgeError};
pub use knowledge::{Belief, FieldBelief, GoalStatus};
pub use master::{ActionResult, GameAction, GameEvent, GameState};
pub use model::{Area, Direction, GameConfig, PlayerId, Position, TeamColor};
pub use sim::{run_game, Lineup};
