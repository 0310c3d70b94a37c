use super::*;

fn cfg() -> GameConfig {
    GameConfig {
        seed: 7,
        ..GameConfig::default()
    }
}

/// A started game with every piece removed and players parked where the
/// test wants them.
fn scripted(cfg: GameConfig) -> GameState {
    let mut s = GameState::init_game(cfg).unwrap();
    s.pieces_on_board.clear();
    s
}

fn place_player(s: &mut GameState, id: PlayerId, pos: Position) {
    // park whoever stands there on a far corner of their own area
    for p in &mut s.players {
        if p.pos == pos && p.player_id != id {
            p.pos = match p.team {
                TeamColor::Red => Position::new(0, 0),
                TeamColor::Blue => Position::new(0, 17),
            };
        }
    }
    s.players[id as usize].pos = pos;
}

fn red(s: &GameState) -> PlayerId {
    s.players.iter().find(|p| p.team == TeamColor::Red && !p.is_leader).unwrap().player_id
}

fn blue(s: &GameState) -> PlayerId {
    s.players.iter().find(|p| p.team == TeamColor::Blue && !p.is_leader).unwrap().player_id
}

#[test]
fn init_counts_match_defaults() {
    let s = GameState::init_game(cfg()).unwrap();
    assert_eq!(s.goals_of(TeamColor::Red).count(), 4);
    assert_eq!(s.goals_of(TeamColor::Blue).count(), 4);
    assert_eq!(s.players.len(), 6);
    assert_eq!(s.pieces_on_board.len(), 6);
    assert_eq!(s.next_spawn_at_ms, 300);
    assert_eq!(s.clock_ms, 0);
    assert!(matches!(s.event_log[0].record, EventRecord::GameInit { .. }));

    for g in &s.goal_fields {
        assert_eq!(area_of(g.pos, &s.cfg).unwrap(), g.owner.goal_area());
    }
    for p in &s.players {
        assert_eq!(area_of(p.pos, &s.cfg).unwrap(), p.team.goal_area());
    }
    let leaders: Vec<_> = s.players.iter().filter(|p| p.is_leader).map(|p| p.player_id).collect();
    assert_eq!(leaders, vec![0, 3]);
    let mut positions: Vec<_> = s.players.iter().map(|p| p.pos).collect();
    positions.sort();
    positions.dedup();
    assert_eq!(positions.len(), 6);
}

#[test]
fn zero_risk_pieces_are_genuine() {
    let s = GameState::init_game(cfg()).unwrap();
    assert!(s.pieces_on_board.values().all(|p| !p.is_sham));
}

#[test]
fn init_is_deterministic() {
    let a = GameState::init_game(cfg()).unwrap();
    let b = GameState::init_game(cfg()).unwrap();
    assert_eq!(to_jsonl(a.event_log()), to_jsonl(b.event_log()));
    let c = GameState::init_game(GameConfig { seed: 8, ..cfg() }).unwrap();
    assert_ne!(a.event_log()[0], c.event_log()[0]);
}

#[test]
fn invalid_config_is_rejected() {
    let bad = GameConfig {
        board_height: 17,
        ..cfg()
    };
    assert!(matches!(GameState::init_game(bad), Err(EngineError::Config(_))));
}

#[test]
fn move_charges_cost_and_updates_position() {
    let mut s = scripted(cfg());
    let id = red(&s);
    place_player(&mut s, id, Position::new(3, 8));
    let r = s.submit_action(id, GameAction::Move { direction: Direction::North }).unwrap();
    assert!(r.ok);
    assert_eq!(r.position, Position::new(3, 7));
    assert_eq!(r.completed_at_ms, 20);
    assert_eq!(s.players[id as usize].ready_at_ms, 20);
}

#[test]
fn not_ready_leaves_state_untouched() {
    let mut s = scripted(cfg());
    let id = red(&s);
    place_player(&mut s, id, Position::new(3, 8));
    s.submit_action(id, GameAction::Discover).unwrap();
    let before = s.clone();
    let err = s.submit_action(id, GameAction::Discover).unwrap_err();
    assert!(matches!(err, EngineError::NotReady { remaining_ms: 100, .. }));
    assert_eq!(s, before);
}

#[test]
fn blue_cannot_enter_red_area() {
    let mut s = scripted(cfg());
    let id = blue(&s);
    place_player(&mut s, id, Position::new(2, 6));
    let r = s.submit_action(id, GameAction::Move { direction: Direction::North }).unwrap();
    assert!(!r.ok);
    assert_eq!(r.reject, Some(RejectReason::OpponentGoalArea));
    assert_eq!(s.players[id as usize].pos, Position::new(2, 6));
}

#[test]
fn move_rejections() {
    let mut s = scripted(cfg());
    let id = red(&s);
    let mate = s.players.iter().find(|p| p.team == TeamColor::Red && p.player_id != id).unwrap().player_id;
    place_player(&mut s, id, Position::new(2, 8));
    place_player(&mut s, mate, Position::new(2, 9));
    let r = s.submit_action(id, GameAction::Move { direction: Direction::South }).unwrap();
    assert_eq!(r.reject, Some(RejectReason::Occupied));
    assert_eq!(s.players[id as usize].ready_at_ms, 20);

    s.clock_ms = 20;
    place_player(&mut s, id, Position::new(0, 8));
    let r = s.submit_action(id, GameAction::Move { direction: Direction::West }).unwrap();
    assert_eq!(r.reject, Some(RejectReason::OffBoard));
}

#[test]
fn discover_distances_match_brute_force() {
    let mut s = scripted(cfg());
    let id = red(&s);
    place_player(&mut s, id, Position::new(2, 7));
    s.pieces_on_board.insert(Position::new(2, 9), Piece { id: 99, is_sham: false });
    let r = s.submit_action(id, GameAction::Discover).unwrap();
    let fields = r.discovered();
    assert_eq!(fields.len(), 9);
    let at = |p: Position| fields.iter().find(|f| f.pos == p).unwrap().distance_to_nearest_piece;
    assert_eq!(at(Position::new(2, 8)), Some(1));
    assert_eq!(at(Position::new(2, 6)), Some(3));

    // independent scan over every piece on the board
    s.pieces_on_board.insert(Position::new(5, 11), Piece { id: 100, is_sham: true });
    s.clock_ms = 100;
    let r = s.submit_action(id, GameAction::Discover).unwrap();
    for f in r.discovered() {
        let mut best: Option<u32> = None;
        for p in s.pieces_on_board.keys() {
            let d = (p.x as i64 - f.pos.x as i64).unsigned_abs() + (p.y as i64 - f.pos.y as i64).unsigned_abs();
            best = Some(best.map_or(d as u32, |b| b.min(d as u32)));
        }
        assert_eq!(f.distance_to_nearest_piece, best);
        // task area fields never reveal goal status
        assert_eq!(f.goal_status, ObservedGoal::NotVisible);
    }
}

#[test]
fn discover_reports_own_goal_status() {
    let mut s = scripted(cfg());
    let id = red(&s);
    let goal = s.goals_of(TeamColor::Red).next().unwrap().pos;
    place_player(&mut s, id, goal);
    let r = s.submit_action(id, GameAction::Discover).unwrap();
    let here = r.discovered().iter().find(|f| f.pos == goal).unwrap();
    assert_eq!(here.goal_status, ObservedGoal::Goal);
    assert!(r.discovered().iter().all(|f| f.distance_to_nearest_piece.is_none()));

    s.goal_fields.iter_mut().find(|g| g.pos == goal).unwrap().completed = true;
    s.clock_ms = 100;
    let r = s.submit_action(id, GameAction::Discover).unwrap();
    let here = r.discovered().iter().find(|f| f.pos == goal).unwrap();
    assert_eq!(here.goal_status, ObservedGoal::CompletedGoal);
}

#[test]
fn pickup_rules() {
    let mut s = scripted(cfg());
    let id = red(&s);
    let pos = Position::new(1, 9);
    place_player(&mut s, id, pos);
    let r = s.submit_action(id, GameAction::PickUp).unwrap();
    assert_eq!(r.reject, Some(RejectReason::NoPieceHere));

    s.clock_ms = 20;
    s.pieces_on_board.insert(pos, Piece { id: 5, is_sham: false });
    let r = s.submit_action(id, GameAction::PickUp).unwrap();
    assert!(r.ok);
    assert_eq!(r.payload, Some(ActionPayload::PickUp { piece_id: 5 }));
    assert!(!s.pieces_on_board.contains_key(&pos));
    assert!(!s.players[id as usize].held_piece_tested);

    s.clock_ms = 40;
    s.pieces_on_board.insert(pos, Piece { id: 6, is_sham: false });
    let r = s.submit_action(id, GameAction::PickUp).unwrap();
    assert_eq!(r.reject, Some(RejectReason::HandsFull));
}

#[test]
fn test_rules() {
    let mut s = scripted(cfg());
    let id = red(&s);
    let r = s.submit_action(id, GameAction::Test).unwrap();
    assert_eq!(r.reject, Some(RejectReason::NoPieceHeld));
    assert_eq!(r.completed_at_ms, 200);

    s.clock_ms = 200;
    s.players[id as usize].held_piece = Some(Piece { id: 1, is_sham: false });
    let r = s.submit_action(id, GameAction::Test).unwrap();
    assert_eq!(r.test_outcome(), Some(TestOutcome::Genuine));
    assert!(s.players[id as usize].held_piece_tested);
    s.clock_ms = 400;
    let r = s.submit_action(id, GameAction::Test).unwrap();
    assert_eq!(r.test_outcome(), Some(TestOutcome::Genuine));

    s.clock_ms = 600;
    s.players[id as usize].held_piece = Some(Piece { id: 2, is_sham: true });
    let r = s.submit_action(id, GameAction::Test).unwrap();
    assert_eq!(r.test_outcome(), Some(TestOutcome::ShamDestroyed));
    assert!(s.players[id as usize].held_piece.is_none());
    assert!(!s.players[id as usize].held_piece_tested);
}

#[test]
fn place_rules() {
    let mut s = scripted(cfg());
    let id = red(&s);
    let goal = s.goals_of(TeamColor::Red).next().unwrap().pos;
    let non_goal = cfg()
        .area_positions(Area::RedGoalArea)
        .find(|p| !s.goal_fields.iter().any(|g| g.pos == *p))
        .unwrap();

    place_player(&mut s, id, goal);
    let r = s.submit_action(id, GameAction::Place).unwrap();
    assert_eq!(r.reject, Some(RejectReason::NoPieceHeld));

    s.clock_ms = 20;
    s.players[id as usize].held_piece = Some(Piece { id: 1, is_sham: true });
    let r = s.submit_action(id, GameAction::Place).unwrap();
    assert_eq!(r.place_outcome(), Some(PlaceOutcome::ShamWasted));
    assert!(s.players[id as usize].held_piece.is_none());
    assert!(!s.goal_fields.iter().find(|g| g.pos == goal).unwrap().completed);

    s.clock_ms = 40;
    s.players[id as usize].held_piece = Some(Piece { id: 2, is_sham: false });
    let r = s.submit_action(id, GameAction::Place).unwrap();
    assert_eq!(r.place_outcome(), Some(PlaceOutcome::GoalCompleted));
    assert!(s.goal_fields.iter().find(|g| g.pos == goal).unwrap().completed);

    // completed goal behaves like a non-goal, piece still consumed
    s.clock_ms = 60;
    s.players[id as usize].held_piece = Some(Piece { id: 3, is_sham: false });
    let r = s.submit_action(id, GameAction::Place).unwrap();
    assert_eq!(r.place_outcome(), Some(PlaceOutcome::NotAGoal));
    assert!(s.players[id as usize].held_piece.is_none());

    s.clock_ms = 80;
    place_player(&mut s, id, non_goal);
    s.players[id as usize].held_piece = Some(Piece { id: 4, is_sham: false });
    let r = s.submit_action(id, GameAction::Place).unwrap();
    assert_eq!(r.place_outcome(), Some(PlaceOutcome::NotAGoal));

    s.clock_ms = 100;
    place_player(&mut s, id, Position::new(0, 8));
    s.players[id as usize].held_piece = Some(Piece { id: 5, is_sham: false });
    let r = s.submit_action(id, GameAction::Place).unwrap();
    assert_eq!(r.reject, Some(RejectReason::NotInGoalArea));
    assert!(s.players[id as usize].held_piece.is_some());
}

#[test]
fn exchange_rules() {
    let mut s = scripted(cfg());
    // red: 0 (leader), 1, 2; blue: 3 (leader), 4, 5
    let r = s.submit_action(1, GameAction::ExchangeInfo { target_player_id: 4 }).unwrap();
    assert_eq!(r.reject, Some(RejectReason::NotTeammate));
    assert_eq!(s.players[1].ready_at_ms, 300);

    s.clock_ms = 300;
    let r = s.submit_action(1, GameAction::ExchangeInfo { target_player_id: 1 }).unwrap();
    assert_eq!(r.reject, Some(RejectReason::SelfExchange));
    s.clock_ms = 600;
    let r = s.submit_action(1, GameAction::ExchangeInfo { target_player_id: 42 }).unwrap();
    assert_eq!(r.reject, Some(RejectReason::UnknownTarget));

    // a non-leader target may refuse: only the initiator pays
    s.clock_ms = 900;
    let mut refuse = |_: PlayerId, _: PlayerId| ExchangeAnswer::Rejected;
    let r = s
        .submit_action_with(1, GameAction::ExchangeInfo { target_player_id: 2 }, &mut refuse)
        .unwrap();
    assert_eq!(r.exchange_answer(), Some(ExchangeAnswer::Rejected));
    assert_eq!(s.players[1].ready_at_ms, 1200);
    assert_eq!(s.players[2].ready_at_ms, 0);

    // the leader cannot refuse
    s.clock_ms = 1200;
    let r = s
        .submit_action_with(1, GameAction::ExchangeInfo { target_player_id: 0 }, &mut refuse)
        .unwrap();
    assert_eq!(r.exchange_answer(), Some(ExchangeAnswer::Accepted));
    assert_eq!(s.players[0].ready_at_ms, 1500);
    assert!(matches!(
        s.event_log.last().unwrap().record,
        EventRecord::ExchangeCompleted { a: 1, b: 0, completes_at_ms: 1500 }
    ));
}

#[test]
fn exchange_merges_server_beliefs() {
    let mut s = scripted(cfg());
    place_player(&mut s, 1, Position::new(1, 1));
    s.submit_action(1, GameAction::Discover).unwrap();
    assert!(s.belief(2).unwrap().fields.is_empty());
    s.clock_ms = 100;
    s.submit_action(1, GameAction::ExchangeInfo { target_player_id: 2 }).unwrap();
    assert_eq!(s.belief(1).unwrap().fields, s.belief(2).unwrap().fields);
    assert_eq!(s.belief(2).unwrap().fields.len(), 9);
}

#[test]
fn winner_after_all_goals() {
    let mut s = scripted(cfg());
    let id = red(&s);
    let goals: Vec<_> = s.goals_of(TeamColor::Red).map(|g| g.pos).collect();
    for (i, g) in goals.iter().enumerate() {
        assert_eq!(s.check_winner(), None, "{i} of 4 goals");
        s.clock_ms = i as u64 * 20;
        place_player(&mut s, id, *g);
        s.players[id as usize].held_piece = Some(Piece { id: 50 + i as u64, is_sham: false });
        s.submit_action(id, GameAction::Place).unwrap();
    }
    assert_eq!(s.winner(), Some(TeamColor::Red));
    assert!(matches!(
        s.event_log.last().unwrap().record,
        EventRecord::GameOver { winner: Some(TeamColor::Red), reason: FinishReason::AllGoalsCompleted }
    ));
    assert!(matches!(s.submit_action(id, GameAction::Discover), Err(EngineError::GameFinished)));
    assert!(matches!(s.advance(), Err(EngineError::GameFinished)));
}

#[test]
fn timeout_is_a_draw() {
    let mut s = GameState::init_game(GameConfig {
        max_game_time_ms: 1000,
        ..cfg()
    })
    .unwrap();
    // nobody acts: the clock runs through spawns up to the cap
    for p in &mut s.players {
        p.ready_at_ms = u64::MAX;
    }
    while !s.is_finished() {
        s.advance().unwrap();
    }
    assert_eq!(s.clock_ms, 1000);
    assert_eq!(
        s.phase,
        Phase::Finished {
            winner: None,
            reason: FinishReason::Timeout
        }
    );
}

#[test]
fn spawn_schedule() {
    let mut s = GameState::init_game(cfg()).unwrap();
    for p in &mut s.players {
        p.ready_at_ms = u64::MAX;
    }
    let mut times = Vec::new();
    while times.len() < 4 {
        for ev in s.advance().unwrap() {
            if let EventRecord::PieceSpawn { .. } = ev.record {
                times.push(ev.t_ms);
            }
        }
    }
    assert_eq!(times, vec![300, 600, 900, 1200]);
}

#[test]
fn spawn_skips_when_task_area_full() {
    let mut s = GameState::init_game(GameConfig {
        initial_pieces: 36,
        ..cfg()
    })
    .unwrap();
    for p in &mut s.players {
        p.ready_at_ms = u64::MAX;
    }
    let evs = s.advance().unwrap();
    assert!(evs.is_empty());
    assert_eq!(s.clock_ms, 300);
    assert_eq!(s.next_spawn_at_ms, 600);
}

#[test]
fn certain_risk_spawns_only_shams() {
    let mut s = GameState::init_game(GameConfig {
        risk_level: 1.0,
        ..cfg()
    })
    .unwrap();
    for p in &mut s.players {
        p.ready_at_ms = u64::MAX;
    }
    for _ in 0..20 {
        s.advance().unwrap();
    }
    assert!(s.pieces_on_board.values().all(|p| p.is_sham));
}

#[test]
fn sham_fraction_tracks_risk() {
    // spawns with pieces removed each tick so the task area never fills
    let mut s = GameState::init_game(GameConfig {
        risk_level: 0.5,
        max_game_time_ms: u64::MAX,
        ..cfg()
    })
    .unwrap();
    for p in &mut s.players {
        p.ready_at_ms = u64::MAX;
    }
    let (mut shams, mut total) = (0u32, 0u32);
    while total < 10_000 {
        for ev in s.advance().unwrap() {
            if let EventRecord::PieceSpawn { is_sham, .. } = ev.record {
                total += 1;
                shams += u32::from(is_sham);
            }
        }
        s.pieces_on_board.clear();
    }
    let frac = f64::from(shams) / f64::from(total);
    assert!((frac - 0.5).abs() <= 0.02, "sham fraction {frac}");
}

#[test]
fn spawn_wins_ties_with_ready_players() {
    let mut s = GameState::init_game(cfg()).unwrap();
    for p in &mut s.players {
        p.ready_at_ms = 300;
    }
    let evs = s.advance().unwrap();
    assert_eq!(s.clock_ms, 300);
    assert!(matches!(evs[0].record, EventRecord::PieceSpawn { .. }));
    let ready: Vec<_> = s.ready_players().collect();
    assert_eq!(ready, vec![0, 1, 2, 3, 4, 5]);
}

#[test]
fn replay_rejects_bad_logs() {
    let mut s = GameState::init_game(cfg()).unwrap();
    s.submit_action(0, GameAction::Discover).unwrap();
    let log = s.event_log().to_vec();

    assert!(matches!(replay(&log[1..]), Err(EngineError::MalformedLog(_))));
    let mut swapped = log.clone();
    swapped[2].seq = 0;
    assert!(matches!(replay(&swapped), Err(EngineError::MalformedLog(_))));

    let mut tampered = log.clone();
    if let EventRecord::PieceSpawn { is_sham, .. } = &mut tampered[1].record {
        *is_sham = !*is_sham;
    }
    assert!(matches!(replay(&tampered), Err(EngineError::MalformedLog(_))));

    assert_eq!(replay(&log).unwrap(), s);
}

#[test]
fn event_log_jsonl_roundtrip() {
    let mut s = GameState::init_game(cfg()).unwrap();
    s.submit_action(0, GameAction::Discover).unwrap();
    s.submit_action(1, GameAction::Move { direction: Direction::South }).unwrap();
    let text = to_jsonl(s.event_log());
    assert!(text.lines().next().unwrap().contains("\"type\":\"game_init\""));
    let back = read_jsonl(text.as_bytes()).unwrap();
    assert_eq!(back, s.event_log());
}
