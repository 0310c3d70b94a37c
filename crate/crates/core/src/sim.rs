//! In-process game loop: one [`Agent`] per player driving a [`GameState`]
//! in simulated time.

use serde::{Deserialize, Serialize};

use crate::agents::{Agent, AgentMemory, AgentOptions, StrategyKind};
use crate::error::EngineError;
use crate::master::{ExchangeAnswer, GameAction, GameState};
use crate::model::{GameConfig, PlayerId, TeamColor};
use crate::seed::mix;

/// Strategies for a homogeneous red team and a homogeneous blue team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineup {
    pub red: StrategyKind,
    pub blue: StrategyKind,
    #[serde(default)]
    pub options: AgentOptions,
}

impl Lineup {
    pub fn new(red: StrategyKind, blue: StrategyKind) -> Self {
        Self {
            red,
            blue,
            options: AgentOptions::default(),
        }
    }

    pub fn homogeneous(kind: StrategyKind) -> Self {
        Self::new(kind, kind)
    }

    pub fn kind_of(&self, team: TeamColor) -> StrategyKind {
        match team {
            TeamColor::Red => self.red,
            TeamColor::Blue => self.blue,
        }
    }
}

/// Seed of a player's private decision stream.
pub fn agent_seed(game_seed: u64, player_id: PlayerId) -> u64 {
    mix(mix(game_seed ^ 0xA6E7_5EED_0000_0000) ^ u64::from(player_id))
}

/// Builds the agents for a freshly initialised game.
pub fn spawn_agents(state: &GameState, lineup: &Lineup) -> Vec<Agent> {
    state
        .players()
        .iter()
        .map(|p| {
            let belief = state.belief(p.player_id).expect("belief per player").clone();
            let memory = AgentMemory::new(
                state.cfg().clone(),
                belief,
                lineup.options,
                agent_seed(state.cfg().seed, p.player_id),
            );
            Agent::new(lineup.kind_of(p.team), memory, p.view())
        })
        .collect()
}

/// Plays one game to completion. Players ready at the same instant act in
/// ascending id order, after any spawn due at that instant.
pub fn run_game(cfg: GameConfig, lineup: &Lineup) -> Result<GameState, EngineError> {
    let mut state = GameState::init_game(cfg)?;
    let mut agents = spawn_agents(&state, lineup);
    let mut ready = Vec::with_capacity(agents.len());

    while !state.is_finished() {
        state.advance()?;
        ready.clear();
        ready.extend(state.ready_players());
        for &pid in &ready {
            if state.is_finished() {
                break;
            }
            // an exchange earlier in this instant may have made pid busy
            let busy = state.player(pid).is_some_and(|p| p.ready_at_ms > state.clock_ms());
            if busy {
                continue;
            }
            let action = agents[pid as usize].decide();
            let result = {
                let mut policy = |target: PlayerId, from: PlayerId| agents[target as usize].accept(from);
                state.submit_action_with(pid, action, &mut policy)?
            };
            let agent = &mut agents[pid as usize];
            agent.observe(&result).expect("result addressed to its actor");
            debug_assert_eq!(Some(agent.view), state.player(pid).map(|p| p.view()));

            if let GameAction::ExchangeInfo { target_player_id } = action {
                if result.exchange_answer() == Some(ExchangeAnswer::Accepted) {
                    for id in [pid, target_player_id] {
                        let delivered = state.belief(id).expect("exchange partner exists");
                        agents[id as usize]
                            .memory
                            .receive_exchange(delivered)
                            .expect("exchange partners share a team");
                    }
                }
            }
        }
    }
    Ok(state)
}
