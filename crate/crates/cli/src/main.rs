use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use project_game::harness::{default_matchups, emit_report, run_plan_observed, ExperimentPlan, MatchReport, PlayedGame};
use project_game::master::{read_jsonl, write_jsonl};
use project_game::metrics::{compute_profile, compute_profiles, write_profiles_csv};
use project_game::{run_game, AgentOptions, GameConfig, Lineup, StrategyKind, TeamColor};
use project_game_server::{play_agent, start, AgentClientConfig, ClockMode, LobbyConfig, ServerOptions};

#[derive(Parser)]
#[command(name = "project-game", version, about = "Project Game engine, server and experiment tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Host games over WebSocket (and optionally NDJSON/TCP).
    Serve(ServeArgs),
    /// Run strategy-pair match series and write a CSV report.
    Tournament(TournamentArgs),
    /// Compute behavioral profiles from an event log.
    Profile(ProfileArgs),
    /// Play one seat of a remote game with a built-in strategy.
    Agent(AgentArgs),
    /// Play one in-process game and write its event log.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ServeArgs {
    /// HTTP listener for `/ws` and static files.
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// JSON game config; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Wall-clock costs (the default).
    #[arg(long, conflicts_with = "fasttime")]
    realtime: bool,
    /// Virtual clock that advances in lockstep with the players.
    #[arg(long)]
    fasttime: bool,
    /// Also accept newline-delimited JSON on this address.
    #[arg(long)]
    tcp: Option<SocketAddr>,
    /// Directory served for paths other than `/ws`.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
    /// Pre-create these game ids and refuse all others.
    #[arg(long = "game")]
    games: Vec<String>,
    /// Multiply every action cost, e.g. 20 for human play.
    #[arg(long, default_value_t = 1)]
    cost_scale: u64,
}

#[derive(Args)]
struct TournamentArgs {
    /// Strategy pair `A:B`, e.g. `tw:shaper`. Omit to run the default matchups.
    #[arg(long)]
    pair: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.5,0.8")]
    risks: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "200,50")]
    test_costs: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    games: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Write every game's event log into this directory.
    #[arg(long)]
    logs: Option<PathBuf>,
    /// Base config for all games (risk and test cost are overridden per cell).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keep strategy A on the red side instead of alternating.
    #[arg(long)]
    no_swap: bool,
    #[arg(long)]
    me_exchange_on_discovery: bool,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    player: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AgentArgs {
    /// NDJSON/TCP address of the server.
    #[arg(long)]
    connect: SocketAddr,
    #[arg(long)]
    game: String,
    #[arg(long)]
    strategy: StrategyKind,
    #[arg(long)]
    team: Option<String>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Decline teammates' exchange requests (leaders always accept).
    #[arg(long)]
    reject_exchanges: bool,
    #[arg(long)]
    me_exchange_on_discovery: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    red: StrategyKind,
    #[arg(long)]
    blue: StrategyKind,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    me_exchange_on_discovery: bool,
}

fn load_config(path: Option<&Path>) -> Result<GameConfig> {
    match path {
        Some(p) => GameConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(GameConfig::default()),
    }
}

fn parse_team(s: &str) -> Result<TeamColor> {
    match s.to_ascii_lowercase().as_str() {
        "red" => Ok(TeamColor::Red),
        "blue" => Ok(TeamColor::Blue),
        _ => bail!("team must be red or blue, got {s:?}"),
    }
}

fn parse_pair(s: &str) -> Result<(StrategyKind, StrategyKind)> {
    let (a, b) = s.split_once(':').context("--pair expects A:B")?;
    Ok((a.parse()?, b.parse()?))
}

async fn serve(args: ServeArgs) -> Result<()> {
    let mut game = load_config(args.config.as_deref())?;
    if args.cost_scale != 1 {
        let k = args.cost_scale;
        game.move_cost_ms *= k;
        game.discovery_cost_ms *= k;
        game.pickup_cost_ms *= k;
        game.place_cost_ms *= k;
        game.test_cost_ms *= k;
        game.exchange_cost_ms *= k;
    }
    let mode = if args.fasttime {
        ClockMode::Fasttime
    } else {
        ClockMode::Realtime
    };
    let server = start(ServerOptions {
        lobby: LobbyConfig {
            game,
            mode,
            log_dir: std::env::var_os("PROJECT_GAME_LOG_DIR").map(PathBuf::from),
            games: args.games,
        },
        http: Some(args.bind),
        tcp: args.tcp,
        static_dir: args.static_dir,
    })
    .await?;
    if let Some(a) = server.http_addr {
        println!("listening http={a}");
    }
    if let Some(a) = server.tcp_addr {
        println!("listening tcp={a}");
    }
    server.wait().await;
    Ok(())
}

fn log_name(a: StrategyKind, b: StrategyKind, g: &PlayedGame) -> String {
    format!("{a}_vs_{b}_risk{}_cost{}_{:04}.jsonl", g.risk, g.test_cost, g.index)
}

fn tournament(args: TournamentArgs) -> Result<()> {
    let base = load_config(args.config.as_deref())?;
    let pairs: Vec<((StrategyKind, StrategyKind), Vec<u64>)> = match &args.pair {
        Some(p) => vec![(parse_pair(p)?, args.test_costs.clone())],
        None => {
            let mut grouped: Vec<((StrategyKind, StrategyKind), Vec<u64>)> = Vec::new();
            for (a, b, cost) in default_matchups() {
                match grouped.iter_mut().find(|(p, _)| *p == (a, b)) {
                    Some((_, costs)) => costs.push(cost),
                    None => grouped.push(((a, b), vec![cost])),
                }
            }
            grouped
        }
    };
    if let Some(dir) = &args.logs {
        std::fs::create_dir_all(dir)?;
    }

    let mut reports: Vec<MatchReport> = Vec::new();
    for ((a, b), costs) in pairs {
        let plan = ExperimentPlan {
            risks: args.risks.clone(),
            test_costs: costs,
            games_per_cell: args.games,
            master_seed: args.seed,
            swap_sides: !args.no_swap,
            base: base.clone(),
            options: AgentOptions {
                me_exchange_on_discovery: args.me_exchange_on_discovery,
            },
            jobs: args.jobs,
            ..ExperimentPlan::new(a, b)
        };
        let write_log = |g: &PlayedGame| {
            if let Some(dir) = &args.logs {
                let path = dir.join(log_name(a, b, g));
                let res = File::create(&path).and_then(|f| write_jsonl(g.state.event_log(), BufWriter::new(f)));
                if let Err(e) = res {
                    eprintln!("could not write {}: {e}", path.display());
                }
            }
        };
        for r in run_plan_observed(&plan, &write_log)? {
            eprintln!(
                "{} vs {} risk={} cost={}: {}/{} wins, {} draws, rate {:.3} [{:.3}, {:.3}]",
                r.strategy_a, r.strategy_b, r.risk, r.test_cost, r.wins_a, r.games, r.draws, r.win_rate_a, r.ci_low, r.ci_high
            );
            reports.push(r);
        }
    }
    emit_report(&reports, &args.out, args.plot.as_deref())?;
    Ok(())
}

fn profile(args: ProfileArgs) -> Result<()> {
    let file = File::open(&args.log).with_context(|| format!("opening {}", args.log.display()))?;
    let log = read_jsonl(BufReader::new(file))?;
    let profiles = match args.player {
        Some(id) => vec![compute_profile(&log, id)?],
        None => compute_profiles(&log)?,
    };
    write_profiles_csv(&profiles, BufWriter::new(File::create(&args.out)?))?;
    Ok(())
}

async fn agent(args: AgentArgs) -> Result<()> {
    let cfg = AgentClientConfig {
        name: args.name,
        team: args.team.as_deref().map(parse_team).transpose()?,
        options: AgentOptions {
            me_exchange_on_discovery: args.me_exchange_on_discovery,
        },
        seed: args.seed,
        accept_exchanges: !args.reject_exchanges,
        ..AgentClientConfig::new(args.game, args.strategy)
    };
    let outcome = play_agent(args.connect, cfg).await?;
    let winner = outcome.winner.map_or("none".to_string(), |w| format!("{w:?}").to_lowercase());
    println!(
        "player={} team={:?} winner={winner} reason={:?} actions={}",
        outcome.player_id, outcome.team, outcome.reason, outcome.actions_sent
    );
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let lineup = Lineup {
        options: AgentOptions {
            me_exchange_on_discovery: args.me_exchange_on_discovery,
        },
        ..Lineup::new(args.red, args.blue)
    };
    let state = run_game(cfg, &lineup)?;
    write_jsonl(state.event_log(), BufWriter::new(File::create(&args.out)?))?;
    let winner = state.winner().map_or("none".to_string(), |w| format!("{w:?}").to_lowercase());
    println!("winner={winner} t_ms={} events={}", state.clock_ms(), state.event_log().len());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Serve(a) => tokio::runtime::Runtime::new()?.block_on(serve(a)),
        Command::Tournament(a) => tournament(a),
        Command::Profile(a) => profile(a),
        Command::Agent(a) => tokio::runtime::Runtime::new()?.block_on(agent(a)),
        Command::Simulate(a) => simulate(a),
    }
}
