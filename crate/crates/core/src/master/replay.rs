use super::{EventRecord, ExchangeAnswer, GameEvent, GameState};
use crate::error::EngineError;
use crate::model::PlayerId;

/// Rebuilds a game by re-executing its log against a fresh engine.
///
/// Every regenerated event must match the logged one. A truncated log yields
/// the state right after its last event.
pub fn replay(log: &[GameEvent]) -> Result<GameState, EngineError> {
    let malformed = |msg: String| EngineError::MalformedLog(msg);

    let first = log.first().ok_or_else(|| malformed("empty log".into()))?;
    let EventRecord::GameInit { cfg, seed, .. } = &first.record else {
        return Err(malformed("log must begin with GameInit".into()));
    };
    for w in log.windows(2) {
        if w[1].seq <= w[0].seq {
            return Err(malformed(format!("seq {} follows {}", w[1].seq, w[0].seq)));
        }
        if w[1].t_ms < w[0].t_ms {
            return Err(malformed(format!("time goes backwards at seq {}", w[1].seq)));
        }
    }

    let mut cfg = cfg.clone();
    cfg.seed = *seed;
    let mut state = GameState::init_game(cfg)?;
    check_prefix(&state, log)?;

    while state.event_log.len() < log.len() {
        let before = state.event_log.len();
        let ev = &log[before];
        match &ev.record {
            EventRecord::ActionTaken { action, result } => {
                let player = ev
                    .player_id
                    .ok_or_else(|| malformed(format!("seq {}: action without player", ev.seq)))?;
                if ev.t_ms > state.clock_ms {
                    state.advance_until(ev.t_ms)?;
                    check_prefix(&state, log)?;
                }
                let answer = result.exchange_answer().unwrap_or(ExchangeAnswer::Accepted);
                let mut logged = |_: PlayerId, _: PlayerId| answer;
                state.submit_action_with(player, *action, &mut logged)?;
            }
            EventRecord::PieceSpawn { .. } | EventRecord::GameOver { .. } => {
                if state.is_finished() {
                    return Err(malformed(format!("seq {}: event after game over", ev.seq)));
                }
                state.advance_until(ev.t_ms)?;
            }
            EventRecord::GameInit { .. } | EventRecord::ExchangeCompleted { .. } => {}
        }
        if state.event_log.len() == before {
            return Err(malformed(format!("seq {}: event cannot be reproduced", ev.seq)));
        }
        check_prefix(&state, log)?;
    }
    Ok(state)
}

fn check_prefix(state: &GameState, log: &[GameEvent]) -> Result<(), EngineError> {
    let n = state.event_log.len().min(log.len());
    match (0..n).find(|&i| state.event_log[i] != log[i]) {
        Some(i) => Err(EngineError::MalformedLog(format!(
            "replay diverges at seq {}",
            log[i].seq
        ))),
        None => Ok(()),
    }
}
