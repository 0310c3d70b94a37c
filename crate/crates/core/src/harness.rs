//! Tournament runner: homogeneous 3v3 match series between two strategies
//! over a grid of risk levels and testing costs.
//!
//! Every game seed is a pure function of the master seed, the cell and the
//! game index, so cells can be run, rerun or dropped independently and games
//! may be played in any order on any number of threads.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentOptions, StrategyKind};
use crate::error::EngineError;
use crate::master::GameState;
use crate::model::{GameConfig, TeamColor};
use crate::seed::{fnv1a, mix};
use crate::sim::{run_game, Lineup};

pub const DEFAULT_RISKS: [f64; 4] = [0.0, 0.2, 0.5, 0.8];
pub const DEFAULT_GAMES_PER_CELL: u32 = 200;
pub const Z_95: f64 = 1.959_963_984_540_054;

pub const CSV_HEADER: [&str; 12] = [
    "risk",
    "test_cost",
    "strategy_a",
    "strategy_b",
    "games",
    "wins_a",
    "wins_b",
    "draws",
    "win_rate_a",
    "ci_low",
    "ci_high",
    "mean_duration_ms",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("game with seed {seed} failed: {source}")]
    Game {
        seed: u64,
        #[source]
        source: EngineError,
    },
    #[error("wilson interval needs at least one trial")]
    Domain,
    #[error("no reports to emit")]
    EmptyReport,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub pair: (StrategyKind, StrategyKind),
    pub risks: Vec<f64>,
    pub test_costs: Vec<u64>,
    pub games_per_cell: u32,
    pub master_seed: u64,
    pub swap_sides: bool,
    /// Everything except risk, test cost and seed is taken from here.
    #[serde(default)]
    pub base: GameConfig,
    #[serde(default)]
    pub options: AgentOptions,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl ExperimentPlan {
    pub fn new(a: StrategyKind, b: StrategyKind) -> Self {
        Self {
            pair: (a, b),
            risks: DEFAULT_RISKS.to_vec(),
            test_costs: vec![GameConfig::default().test_cost_ms],
            games_per_cell: DEFAULT_GAMES_PER_CELL,
            master_seed: 0,
            swap_sides: true,
            base: GameConfig::default(),
            options: AgentOptions::default(),
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.games_per_cell == 0 {
            return Err(HarnessError::InvalidPlan("games_per_cell must be positive".into()));
        }
        if self.swap_sides && !self.games_per_cell.is_multiple_of(2) {
            return Err(HarnessError::InvalidPlan(format!(
                "games_per_cell {} must be even when swapping sides",
                self.games_per_cell
            )));
        }
        if let Some(r) = self.risks.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(HarnessError::InvalidPlan(format!("risk {r} is outside [0, 1]")));
        }
        if self.jobs == Some(0) {
            return Err(HarnessError::InvalidPlan("jobs must be positive".into()));
        }
        for cell in self.cells() {
            self.config_for(cell.0, cell.1, 0)
                .validate()
                .map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
        }
        Ok(())
    }

    /// (risk, test_cost) pairs, test costs outermost.
    pub fn cells(&self) -> Vec<(f64, u64)> {
        self.test_costs
            .iter()
            .flat_map(|&c| self.risks.iter().map(move |&r| (r, c)))
            .collect()
    }

    pub fn config_for(&self, risk: f64, test_cost: u64, seed: u64) -> GameConfig {
        GameConfig {
            risk_level: risk,
            test_cost_ms: test_cost,
            seed,
            ..self.base.clone()
        }
    }

    /// Whether strategy A plays red in game `index`.
    pub fn a_is_red(&self, index: u32) -> bool {
        !self.swap_sides || index.is_multiple_of(2)
    }

    pub fn lineup(&self, index: u32) -> Lineup {
        let (a, b) = self.pair;
        let mut lineup = if self.a_is_red(index) {
            Lineup::new(a, b)
        } else {
            Lineup::new(b, a)
        };
        lineup.options = self.options;
        lineup
    }
}

/// Stable identifier of a cell, derived from its content rather than its
/// position in the plan.
pub fn cell_key(pair: (StrategyKind, StrategyKind), risk: f64, test_cost: u64) -> u64 {
    let text = format!("{}:{}:{:016x}:{}", pair.0, pair.1, risk.to_bits(), test_cost);
    fnv1a(text.as_bytes())
}

pub fn game_seed(master_seed: u64, cell_key: u64, index: u32) -> u64 {
    mix(mix(mix(master_seed) ^ cell_key) ^ u64::from(index))
}

/// A finished game as handed to observers.
#[derive(Debug)]
pub struct PlayedGame<'a> {
    pub risk: f64,
    pub test_cost: u64,
    pub index: u32,
    pub seed: u64,
    pub lineup: Lineup,
    pub state: &'a GameState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub risk: f64,
    pub test_cost: u64,
    pub strategy_a: StrategyKind,
    pub strategy_b: StrategyKind,
    pub games: u32,
    pub wins_a: u32,
    pub wins_b: u32,
    pub draws: u32,
    pub win_rate_a: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_duration_ms: f64,
}

impl MatchReport {
    /// Win rate of A among decided games only; `None` if every game was drawn.
    pub fn win_rate_decided(&self) -> Option<f64> {
        let decided = self.wins_a + self.wins_b;
        (decided > 0).then(|| f64::from(self.wins_a) / f64::from(decided))
    }

    pub fn excludes_half(&self) -> bool {
        self.ci_low > 0.5 || self.ci_high < 0.5
    }
}

struct GameOutcome {
    a_won: Option<bool>,
    duration_ms: u64,
}

pub fn run_cell(plan: &ExperimentPlan, risk: f64, test_cost: u64) -> Result<MatchReport, HarnessError> {
    run_cell_observed(plan, risk, test_cost, &|_| {})
}

/// Like [`run_cell`], calling `observer` once per finished game. Observers run
/// on worker threads in no particular order.
pub fn run_cell_observed(
    plan: &ExperimentPlan,
    risk: f64,
    test_cost: u64,
    observer: &(dyn Fn(&PlayedGame) + Sync),
) -> Result<MatchReport, HarnessError> {
    plan.validate()?;
    let key = cell_key(plan.pair, risk, test_cost);
    let play = |index: u32| -> Result<GameOutcome, HarnessError> {
        let seed = game_seed(plan.master_seed, key, index);
        let lineup = plan.lineup(index);
        let state = run_game(plan.config_for(risk, test_cost, seed), &lineup)
            .map_err(|source| HarnessError::Game { seed, source })?;
        observer(&PlayedGame {
            risk,
            test_cost,
            index,
            seed,
            lineup,
            state: &state,
        });
        let a_team = if plan.a_is_red(index) { TeamColor::Red } else { TeamColor::Blue };
        Ok(GameOutcome {
            a_won: state.winner().map(|w| w == a_team),
            duration_ms: state.clock_ms(),
        })
    };
    let outcomes: Vec<GameOutcome> = match plan.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| io::Error::other(e.to_string()))?
            .install(|| (0..plan.games_per_cell).into_par_iter().map(play).collect::<Result<_, _>>())?,
        None => (0..plan.games_per_cell).into_par_iter().map(play).collect::<Result<_, _>>()?,
    };
    aggregate(plan.pair, risk, test_cost, &outcomes)
}

fn aggregate(
    pair: (StrategyKind, StrategyKind),
    risk: f64,
    test_cost: u64,
    outcomes: &[GameOutcome],
) -> Result<MatchReport, HarnessError> {
    let games = outcomes.len() as u32;
    let wins_a = outcomes.iter().filter(|o| o.a_won == Some(true)).count() as u32;
    let wins_b = outcomes.iter().filter(|o| o.a_won == Some(false)).count() as u32;
    let (ci_low, ci_high) = wilson_interval(wins_a, games, Z_95)?;
    let total: u64 = outcomes.iter().map(|o| o.duration_ms).sum();
    Ok(MatchReport {
        risk,
        test_cost,
        strategy_a: pair.0,
        strategy_b: pair.1,
        games,
        wins_a,
        wins_b,
        draws: games - wins_a - wins_b,
        win_rate_a: f64::from(wins_a) / f64::from(games),
        ci_low,
        ci_high,
        mean_duration_ms: total as f64 / f64::from(games),
    })
}

/// Runs every cell of the plan, test costs outermost, risks in plan order.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<MatchReport>, HarnessError> {
    run_plan_observed(plan, &|_| {})
}

pub fn run_plan_observed(
    plan: &ExperimentPlan,
    observer: &(dyn Fn(&PlayedGame) + Sync),
) -> Result<Vec<MatchReport>, HarnessError> {
    plan.cells()
        .into_iter()
        .map(|(risk, cost)| run_cell_observed(plan, risk, cost, observer))
        .collect()
}

/// Wilson score interval for `wins` successes in `n` trials.
pub fn wilson_interval(wins: u32, n: u32, z: f64) -> Result<(f64, f64), HarnessError> {
    if n == 0 || wins > n {
        return Err(HarnessError::Domain);
    }
    let n_f = f64::from(n);
    let p = f64::from(wins) / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let low = if wins == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let high = if wins == n { 1.0 } else { (centre + half).clamp(p, 1.0) };
    Ok((low, high))
}

/// The matchups compared by default: each richer strategy against a simpler one.
pub fn default_matchups() -> Vec<(StrategyKind, StrategyKind, u64)> {
    use StrategyKind::*;
    vec![
        (Teamworker, Shaper, 200),
        (MonitorEvaluator, CompleterFinisher, 200),
        (CompleterFinisher, Shaper, 200),
        (CompleterFinisher, Shaper, 50),
        (MonitorEvaluator, Teamworker, 200),
    ]
}

pub fn write_csv<W: io::Write>(reports: &[MatchReport], out: W) -> Result<(), HarnessError> {
    if reports.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<MatchReport>, HarnessError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(Into::into)
}

/// Writes the CSV and, optionally, the SVG chart. Nothing is written for an
/// empty report list.
pub fn emit_report(reports: &[MatchReport], csv_path: &Path, svg_path: Option<&Path>) -> Result<(), HarnessError> {
    if reports.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let mut buf = Vec::new();
    write_csv(reports, &mut buf)?;
    fs::write(csv_path, buf)?;
    if let Some(p) = svg_path {
        fs::write(p, render_svg(reports))?;
    }
    Ok(())
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Grouped bar chart of A's win rate per risk level, one series per
/// (pair, test cost), with Wilson intervals as whiskers.
pub fn render_svg(reports: &[MatchReport]) -> String {
    let (w, h) = (720.0, 420.0);
    let (left, right, top, bottom) = (60.0, 220.0, 30.0, 50.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;

    let mut series: Vec<(StrategyKind, StrategyKind, u64)> = Vec::new();
    let mut risks: Vec<f64> = Vec::new();
    for r in reports {
        let s = (r.strategy_a, r.strategy_b, r.test_cost);
        if !series.contains(&s) {
            series.push(s);
        }
        if !risks.iter().any(|x| x.to_bits() == r.risk.to_bits()) {
            risks.push(r.risk);
        }
    }
    risks.sort_by(f64::total_cmp);

    let y = |v: f64| top + plot_h * (1.0 - v);
    let group_w = plot_w / risks.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for tick in 0..=4 {
        let v = f64::from(tick) * 0.25;
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{yy:.1}" x2="{x2:.1}" y2="{yy:.1}" stroke="#ddd"/><text x="{tx}" y="{ty:.1}" text-anchor="end">{pct}%</text>"##,
            yy = y(v),
            x2 = left + plot_w,
            tx = left - 6.0,
            ty = y(v) + 4.0,
            pct = tick * 25,
        );
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{left}" y1="{yy:.1}" x2="{x2:.1}" y2="{yy:.1}" stroke="#555" stroke-dasharray="4 3"/>"##,
        yy = y(0.5),
        x2 = left + plot_w,
    );

    for (gi, risk) in risks.iter().enumerate() {
        let gx = left + group_w * gi as f64 + group_w * 0.1;
        for (si, s) in series.iter().enumerate() {
            let Some(r) = reports
                .iter()
                .find(|r| (r.strategy_a, r.strategy_b, r.test_cost) == *s && r.risk.to_bits() == risk.to_bits())
            else {
                continue;
            };
            let x = gx + bar_w * si as f64;
            let colour = PALETTE[si % PALETTE.len()];
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.1}" y="{yy:.1}" width="{bw:.1}" height="{bh:.1}" fill="{colour}"><title>{a} vs {b} ({c} ms), risk {risk}: {rate:.3}</title></rect>"#,
                yy = y(r.win_rate_a),
                bw = bar_w * 0.9,
                bh = plot_h * r.win_rate_a,
                a = r.strategy_a,
                b = r.strategy_b,
                c = r.test_cost,
                rate = r.win_rate_a,
            );
            let cx = x + bar_w * 0.45;
            let _ = writeln!(
                svg,
                r#"<line x1="{cx:.1}" y1="{lo:.1}" x2="{cx:.1}" y2="{hi:.1}" stroke="black"/>"#,
                lo = y(r.ci_low),
                hi = y(r.ci_high),
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{tx:.1}" y="{ty:.1}" text-anchor="middle">{risk}</text>"#,
            tx = left + group_w * (gi as f64 + 0.5),
            ty = top + plot_h + 18.0,
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{tx:.1}" y="{ty:.1}" text-anchor="middle">risk level</text>"#,
        tx = left + plot_w / 2.0,
        ty = h - 10.0,
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{ty:.1}" transform="rotate(-90 16 {ty:.1})" text-anchor="middle">games won by A</text>"#,
        ty = top + plot_h / 2.0,
    );
    for (si, (a, b, c)) in series.iter().enumerate() {
        let ly = top + 16.0 + 20.0 * si as f64;
        let lx = w - right + 16.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx}" y="{ry:.1}" width="12" height="12" fill="{colour}"/><text x="{tx}" y="{ly:.1}">{a} vs {b} ({c} ms)</text>"#,
            ry = ly - 10.0,
            colour = PALETTE[si % PALETTE.len()],
            tx = lx + 18.0,
        );
    }
    svg.push_str("</svg>\n");
    svg
}
