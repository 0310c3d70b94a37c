//! Behavioural profiles computed from event logs.
//!
//! A profile counts what a player did and maps the counts onto four axes:
//! quality (tests before delivering), risk acceptance (delivers untested),
//! cooperation (share of time-slots spent on information exchange) and pace
//! (deliveries per simulated minute). Everything is recomputed from
//! `ActionTaken` records, so humans and agents are profiled identically.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::master::{ActionPayload, EventRecord, ExchangeAnswer, GameAction, GameEvent, PlaceOutcome, TestOutcome};
use crate::model::{PlayerId, TeamColor};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("player {0} does not appear in the log")]
    UnknownPlayer(PlayerId),
    #[error("malformed event log: {0}")]
    MalformedLog(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Raw per-player tallies; everything in [`PlayerProfile`] derives from these.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub actions_total: u64,
    pub moves: u64,
    pub discoveries: u64,
    pub pickups: u64,
    /// Tests of a held piece not yet known to be genuine.
    pub first_tests: u64,
    pub tests: u64,
    /// Place actions that consumed a piece.
    pub deliveries_attempted: u64,
    pub untested_deliveries: u64,
    pub goals_validated: u64,
    pub exchanges_initiated: u64,
    /// Requests from teammates this player accepted.
    pub exchanges_accepted: u64,
    /// Simulated time the player was in the game.
    pub duration_ms: u64,
}

impl ActionCounts {
    pub fn add(&mut self, o: &ActionCounts) {
        self.actions_total += o.actions_total;
        self.moves += o.moves;
        self.discoveries += o.discoveries;
        self.pickups += o.pickups;
        self.first_tests += o.first_tests;
        self.tests += o.tests;
        self.deliveries_attempted += o.deliveries_attempted;
        self.untested_deliveries += o.untested_deliveries;
        self.goals_validated += o.goals_validated;
        self.exchanges_initiated += o.exchanges_initiated;
        self.exchanges_accepted += o.exchanges_accepted;
        self.duration_ms += o.duration_ms;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerProfile {
    /// `None` for pooled profiles.
    pub player_id: Option<PlayerId>,
    pub team: Option<TeamColor>,
    #[serde(flatten)]
    pub counts: ActionCounts,
    pub tests_per_pickup: f64,
    pub untested_delivery_rate: f64,
    pub exchanges_initiated_per_min: f64,
    pub accepted_per_min: f64,
    pub discoveries_per_min: f64,
    pub quality: f64,
    pub risk_acceptance: f64,
    pub cooperation: f64,
    pub pace: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl PlayerProfile {
    pub fn from_counts(player_id: Option<PlayerId>, team: Option<TeamColor>, c: ActionCounts) -> Self {
        let minutes = c.duration_ms as f64 / 60_000.0;
        let per_min = |n: u64| if minutes > 0.0 { n as f64 / minutes } else { 0.0 };
        let untested = ratio(c.untested_deliveries, c.deliveries_attempted);
        Self {
            player_id,
            team,
            counts: c,
            tests_per_pickup: ratio(c.first_tests, c.pickups),
            untested_delivery_rate: untested,
            exchanges_initiated_per_min: per_min(c.exchanges_initiated),
            accepted_per_min: per_min(c.exchanges_accepted),
            discoveries_per_min: per_min(c.discoveries),
            quality: 1.0 - untested,
            risk_acceptance: untested,
            cooperation: ratio(
                c.exchanges_initiated + c.exchanges_accepted,
                c.actions_total + c.exchanges_accepted,
            ),
            pace: per_min(c.deliveries_attempted),
        }
    }

    pub fn axes(&self) -> [f64; 4] {
        [self.quality, self.risk_acceptance, self.cooperation, self.pace]
    }
}

#[derive(Default)]
struct Tracker {
    counts: ActionCounts,
    holding: bool,
    tested: bool,
}

/// Profiles of every player in the log, in player id order.
pub fn compute_profiles(log: &[GameEvent]) -> Result<Vec<PlayerProfile>, MetricsError> {
    let Some(GameEvent {
        record: EventRecord::GameInit { players, .. },
        ..
    }) = log.first()
    else {
        return Err(MetricsError::MalformedLog("log must start with game_init".into()));
    };
    let teams: BTreeMap<PlayerId, TeamColor> = players.iter().map(|p| (p.player_id, p.team)).collect();
    let mut trackers: BTreeMap<PlayerId, Tracker> = teams.keys().map(|&id| (id, Tracker::default())).collect();
    let end_ms = log.last().map_or(0, |e| e.t_ms);

    for ev in log {
        let EventRecord::ActionTaken { action, result } = &ev.record else {
            continue;
        };
        let Some(t) = trackers.get_mut(&result.player_id) else {
            return Err(MetricsError::MalformedLog(format!(
                "action by unknown player {} at seq {}",
                result.player_id, ev.seq
            )));
        };
        let c = &mut t.counts;
        c.actions_total += 1;
        match (action, &result.payload) {
            (GameAction::Move { .. }, _) => c.moves += 1,
            (GameAction::Discover, _) => c.discoveries += 1,
            (GameAction::PickUp, Some(ActionPayload::PickUp { .. })) => {
                c.pickups += 1;
                t.holding = true;
                t.tested = false;
            }
            (GameAction::Test, Some(ActionPayload::Test { outcome })) => {
                c.tests += 1;
                if !t.tested {
                    c.first_tests += 1;
                }
                match outcome {
                    TestOutcome::Genuine => t.tested = true,
                    TestOutcome::ShamDestroyed => {
                        t.holding = false;
                        t.tested = false;
                    }
                }
            }
            (GameAction::Test, None) => c.tests += 1,
            (GameAction::Place, Some(ActionPayload::Place { outcome })) => {
                c.deliveries_attempted += 1;
                if !t.tested {
                    c.untested_deliveries += 1;
                }
                if *outcome == PlaceOutcome::GoalCompleted {
                    c.goals_validated += 1;
                }
                t.holding = false;
                t.tested = false;
            }
            (GameAction::ExchangeInfo { target_player_id }, payload) => {
                c.exchanges_initiated += 1;
                let accepted = matches!(
                    payload,
                    Some(ActionPayload::ExchangeInfo {
                        answer: ExchangeAnswer::Accepted
                    })
                );
                if accepted {
                    if let Some(target) = trackers.get_mut(target_player_id) {
                        target.counts.exchanges_accepted += 1;
                    }
                }
            }
            _ => {}
        }
    }

    Ok(trackers
        .into_iter()
        .map(|(id, mut t)| {
            t.counts.duration_ms = end_ms;
            PlayerProfile::from_counts(Some(id), teams.get(&id).copied(), t.counts)
        })
        .collect())
}

pub fn compute_profile(log: &[GameEvent], player_id: PlayerId) -> Result<PlayerProfile, MetricsError> {
    compute_profiles(log)?
        .into_iter()
        .find(|p| p.player_id == Some(player_id))
        .ok_or(MetricsError::UnknownPlayer(player_id))
}

/// Pools raw counts (and playing time) and recomputes the derived fields, so
/// ratios are weighted by opportunity rather than averaged per player.
pub fn aggregate<'a>(profiles: impl IntoIterator<Item = &'a PlayerProfile>) -> PlayerProfile {
    let mut total = ActionCounts::default();
    for p in profiles {
        total.add(&p.counts);
    }
    PlayerProfile::from_counts(None, None, total)
}

/// Euclidean distance over the four axes, with pace min-max normalised over
/// `set` (which should contain `a` and `b`).
pub fn profile_distance_in(a: &PlayerProfile, b: &PlayerProfile, set: &[&PlayerProfile]) -> f64 {
    let (lo, hi) = set
        .iter()
        .chain([&a, &b])
        .map(|p| p.pace)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let norm = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
    let (x, y) = (a.axes(), b.axes());
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2], norm(x[3]) - norm(y[3])];
    d.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn profile_distance(a: &PlayerProfile, b: &PlayerProfile) -> f64 {
    profile_distance_in(a, b, &[a, b])
}

pub const PROFILE_CSV_HEADER: [&str; 23] = [
    "player_id",
    "team",
    "actions_total",
    "moves",
    "discoveries",
    "pickups",
    "first_tests",
    "tests",
    "deliveries_attempted",
    "untested_deliveries",
    "goals_validated",
    "exchanges_initiated",
    "exchanges_accepted",
    "duration_ms",
    "tests_per_pickup",
    "untested_delivery_rate",
    "exchanges_initiated_per_min",
    "accepted_per_min",
    "discoveries_per_min",
    "quality",
    "risk_acceptance",
    "cooperation",
    "pace",
];

/// One row per profile; pooled profiles leave player_id and team empty.
pub fn write_profiles_csv<W: io::Write>(profiles: &[PlayerProfile], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_CSV_HEADER)?;
    for p in profiles {
        let c = &p.counts;
        let mut row = vec![
            p.player_id.map(|id| id.to_string()).unwrap_or_default(),
            p.team.map(|t| t.to_string()).unwrap_or_default(),
        ];
        row.extend(
            [
                c.actions_total,
                c.moves,
                c.discoveries,
                c.pickups,
                c.first_tests,
                c.tests,
                c.deliveries_attempted,
                c.untested_deliveries,
                c.goals_validated,
                c.exchanges_initiated,
                c.exchanges_accepted,
                c.duration_ms,
            ]
            .map(|v| v.to_string()),
        );
        row.extend(
            [
                p.tests_per_pickup,
                p.untested_delivery_rate,
                p.exchanges_initiated_per_min,
                p.accepted_per_min,
                p.discoveries_per_min,
                p.quality,
                p.risk_acceptance,
                p.cooperation,
                p.pace,
            ]
            .map(|v| v.to_string()),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
