//! Transports. Both carry the same JSON messages: WebSocket text frames on
//! `/ws`, or newline-delimited JSON over plain TCP for headless agents.

use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use project_game::PlayerId;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tower_http::services::ServeDir;

use crate::lobby::{Command, GameHandle, Lobby, LobbyConfig};
use crate::wire::{ErrorCode, WireMessage};

/// One connected client, independent of transport.
pub(crate) struct Session {
    lobby: Arc<Lobby>,
    outbox: mpsc::UnboundedSender<WireMessage>,
    seat: Option<(GameHandle, PlayerId)>,
}

impl Session {
    pub(crate) fn new(lobby: Arc<Lobby>, outbox: mpsc::UnboundedSender<WireMessage>) -> Self {
        Self {
            lobby,
            outbox,
            seat: None,
        }
    }

    fn send(&self, msg: WireMessage) {
        let _ = self.outbox.send(msg);
    }

    pub(crate) async fn handle(&mut self, text: &str) {
        let msg = match WireMessage::parse_client(text) {
            Ok(m) => m,
            Err(e) => return self.send(e),
        };
        match msg {
            WireMessage::JoinGame {
                game_id,
                name,
                preferred_team,
                mode,
                accept_exchanges,
            } => {
                if self.seat.is_some() {
                    return self.send(WireMessage::error(ErrorCode::AlreadyJoined, "this session already has a seat"));
                }
                let handle = match self.lobby.lookup(&game_id) {
                    Ok(h) => h,
                    Err(e) => return self.send(e),
                };
                let (reply, answer) = oneshot::channel();
                let cmd = Command::Join {
                    name,
                    preferred: preferred_team,
                    mode,
                    accept_exchanges,
                    outbox: self.outbox.clone(),
                    reply,
                };
                if handle.tx.send(cmd).is_err() {
                    return self.send(WireMessage::error(ErrorCode::GameFinished, format!("game {game_id} is over")));
                }
                match answer.await {
                    Ok(Ok(id)) => self.seat = Some((handle, id)),
                    Ok(Err(e)) => self.send(e),
                    Err(_) => self.send(WireMessage::error(ErrorCode::GameFinished, format!("game {game_id} is over"))),
                }
            }
            WireMessage::ActionRequest { player_id, action } => {
                let Some((handle, id)) = &self.seat else {
                    return self.send(WireMessage::error(ErrorCode::NotJoined, "join a game first"));
                };
                if player_id.is_some_and(|p| p != *id) {
                    return self.send(WireMessage::error(
                        ErrorCode::WrongPlayer,
                        format!("this session plays as {id}"),
                    ));
                }
                if handle.tx.send(Command::Action { player: *id, action }).is_err() {
                    self.send(WireMessage::error(ErrorCode::GameFinished, "game is over"));
                }
            }
            _ => unreachable!("parse_client admits only client messages"),
        }
    }

    pub(crate) fn close(self) {
        if let Some((handle, player)) = self.seat {
            let _ = handle.tx.send(Command::Leave { player });
        }
    }
}

async fn ws_upgrade(State(lobby): State<Arc<Lobby>>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| ws_session(lobby, socket))
}

async fn ws_session(lobby: Arc<Lobby>, socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<WireMessage>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            if sink.send(Message::Text(msg.to_json().into())).await.is_err() {
                break;
            }
        }
    });
    let mut session = Session::new(lobby, tx);
    while let Some(Ok(frame)) = stream.next().await {
        match frame {
            Message::Text(t) => session.handle(t.as_str()).await,
            Message::Binary(b) => match std::str::from_utf8(&b) {
                Ok(t) => session.handle(t).await,
                Err(_) => session.send(WireMessage::error(ErrorCode::Parse, "frames must be utf-8 JSON")),
            },
            Message::Close(_) => break,
            _ => {}
        }
    }
    session.close();
    writer.abort();
}

async fn tcp_session(lobby: Arc<Lobby>, stream: TcpStream) {
    let (read, mut write) = stream.into_split();
    let (tx, mut rx) = mpsc::unbounded_channel::<WireMessage>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            let mut line = msg.to_json();
            line.push('\n');
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    let mut session = Session::new(lobby, tx);
    let mut lines = BufReader::new(read).lines();
    while let Ok(Some(line)) = lines.next_line().await {
        if !line.trim().is_empty() {
            session.handle(&line).await;
        }
    }
    session.close();
    // let queued replies drain before the socket is dropped
    let _ = writer.await;
}

pub fn router(lobby: Arc<Lobby>, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(ws_upgrade)).with_state(lobby);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

#[derive(Debug, Clone)]
pub struct ServerOptions {
    pub lobby: LobbyConfig,
    /// WebSocket (and static files) listener.
    pub http: Option<SocketAddr>,
    /// Newline-delimited JSON listener.
    pub tcp: Option<SocketAddr>,
    pub static_dir: Option<PathBuf>,
}

/// A started server. Listeners run until the handle is dropped or shut down.
pub struct RunningServer {
    pub http_addr: Option<SocketAddr>,
    pub tcp_addr: Option<SocketAddr>,
    pub lobby: Arc<Lobby>,
    tasks: Vec<JoinHandle<()>>,
}

impl RunningServer {
    pub async fn wait(mut self) {
        for t in std::mem::take(&mut self.tasks) {
            let _ = t.await;
        }
    }

    pub fn shutdown(&self) {
        for t in &self.tasks {
            t.abort();
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

pub async fn start(opts: ServerOptions) -> io::Result<RunningServer> {
    opts.lobby
        .game
        .validate()
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let lobby = Lobby::new(opts.lobby);
    let mut tasks = Vec::new();

    let mut http_addr = None;
    if let Some(addr) = opts.http {
        let listener = TcpListener::bind(addr).await?;
        http_addr = Some(listener.local_addr()?);
        let app = router(Arc::clone(&lobby), opts.static_dir);
        tasks.push(tokio::spawn(async move {
            if let Err(e) = axum::serve(listener, app).await {
                eprintln!("http listener stopped: {e}");
            }
        }));
    }

    let mut tcp_addr = None;
    if let Some(addr) = opts.tcp {
        let listener = TcpListener::bind(addr).await?;
        tcp_addr = Some(listener.local_addr()?);
        let lobby = Arc::clone(&lobby);
        tasks.push(tokio::spawn(async move {
            loop {
                match listener.accept().await {
                    Ok((stream, _)) => {
                        let _ = stream.set_nodelay(true);
                        tokio::spawn(tcp_session(Arc::clone(&lobby), stream));
                    }
                    Err(e) => eprintln!("accept failed: {e}"),
                }
            }
        }));
    }

    Ok(RunningServer {
        http_addr,
        tcp_addr,
        lobby,
        tasks,
    })
}
