//! Network front end.
//!
//! Each room is owned by one actor thread that applies envelopes in arrival
//! order, writes the step to the room log and only then hands the outputs to
//! the per-connection writers. Connections speak the same NDJSON protocol
//! over raw TCP or over WebSocket text frames; the WebSocket port also
//! serves static files for browser clients.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use avatar_sync_core::protocol::ErrorCode;
use avatar_sync_core::{decode_message, encode_message, Envelope, Message, NarrativeConfig, PlayerId, RoomState, Sender};

use crate::log::SessionLog;

/// Longest accepted line; anything longer closes the connection.
pub const MAX_LINE_BYTES: usize = 64 * 1024;
pub const DEFAULT_HEARTBEAT: Duration = Duration::from_secs(10);
pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30);
/// Overrides the log directory given on the command line.
pub const LOG_DIR_ENV: &str = "AVATAR_SYNC_LOG_DIR";

const POLL: Duration = Duration::from_millis(50);
const WS_POLL: Duration = Duration::from_millis(5);

#[derive(Debug, Clone)]
pub struct ServerOptions {
    pub bind: SocketAddr,
    /// WebSocket and static file listener; `None` disables it.
    pub ws_bind: Option<SocketAddr>,
    pub web_root: Option<PathBuf>,
    pub config: Arc<NarrativeConfig>,
    pub seed: u64,
    pub log_dir: PathBuf,
    pub heartbeat: Duration,
    pub idle_timeout: Duration,
}

impl ServerOptions {
    pub fn new(bind: SocketAddr, config: Arc<NarrativeConfig>, seed: u64, log_dir: impl Into<PathBuf>) -> Self {
        ServerOptions {
            bind,
            ws_bind: None,
            web_root: None,
            config,
            seed,
            log_dir: log_dir.into(),
            heartbeat: DEFAULT_HEARTBEAT,
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: io::Error },
}

/// Counters a room exposes to the outside, mainly for the simulator.
#[derive(Debug, Default)]
pub struct RoomStats {
    applied: AtomicU64,
    last_seq: AtomicU64,
    score: AtomicU32,
    closed: AtomicBool,
}

impl RoomStats {
    /// Client lines the room has processed, rejected ones included.
    pub fn applied(&self) -> u64 {
        self.applied.load(Ordering::SeqCst)
    }

    /// Highest sequence number emitted so far.
    pub fn last_seq(&self) -> u64 {
        self.last_seq.load(Ordering::SeqCst)
    }

    pub fn score(&self) -> u32 {
        self.score.load(Ordering::SeqCst)
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::SeqCst)
    }
}

type ConnId = u64;

enum Outgoing {
    Line(Arc<str>),
    Close,
}

type Outbox = mpsc::Sender<Outgoing>;

enum RoomCmd {
    Connect { conn: ConnId, outbox: Outbox },
    Input { conn: ConnId, envelope: Envelope, received_at: u64 },
    Disconnect { conn: ConnId },
    Snapshot { reply: mpsc::Sender<RoomSnapshot> },
    Stop,
}

/// Room state at one point of its history.
#[derive(Debug, Clone)]
pub struct RoomSnapshot {
    /// Canonical state JSON, as [`RoomState::snapshot_json`].
    pub state_json: String,
    pub score: u32,
    pub last_seq: u64,
    /// Length of the log prefix that produced this state.
    pub log_bytes: u64,
}

#[derive(Clone)]
struct RoomHandle {
    tx: mpsc::Sender<RoomCmd>,
    stats: Arc<RoomStats>,
}

struct Shared {
    config: Arc<NarrativeConfig>,
    seed: u64,
    log_dir: PathBuf,
    web_root: Option<PathBuf>,
    heartbeat: Duration,
    idle_timeout: Duration,
    rooms: Mutex<HashMap<String, RoomHandle>>,
    actors: Mutex<Vec<JoinHandle<()>>>,
    sockets: Mutex<HashMap<ConnId, TcpStream>>,
    next_conn: AtomicU64,
    shutdown: AtomicBool,
}

/// A running server. Dropping it does not stop it; call [`Server::shutdown`].
pub struct Server {
    tcp_addr: SocketAddr,
    ws_addr: Option<SocketAddr>,
    shared: Arc<Shared>,
    acceptors: Vec<JoinHandle<()>>,
}

impl Server {
    pub fn start(opts: ServerOptions) -> Result<Server, ServeError> {
        let bind = |addr: SocketAddr| -> Result<TcpListener, ServeError> {
            let l = TcpListener::bind(addr).map_err(|source| ServeError::Bind { addr, source })?;
            l.set_nonblocking(true)
                .map_err(|source| ServeError::Bind { addr, source })?;
            Ok(l)
        };
        let tcp = bind(opts.bind)?;
        let ws = opts.ws_bind.map(bind).transpose()?;
        let tcp_addr = tcp.local_addr().expect("bound");
        let ws_addr = ws.as_ref().map(|l| l.local_addr().expect("bound"));

        let shared = Arc::new(Shared {
            config: opts.config,
            seed: opts.seed,
            log_dir: opts.log_dir,
            web_root: opts.web_root,
            heartbeat: opts.heartbeat,
            idle_timeout: opts.idle_timeout,
            rooms: Mutex::new(HashMap::new()),
            actors: Mutex::new(Vec::new()),
            sockets: Mutex::new(HashMap::new()),
            next_conn: AtomicU64::new(1),
            shutdown: AtomicBool::new(false),
        });

        let mut acceptors = Vec::new();
        let s = shared.clone();
        acceptors.push(thread::spawn(move || accept_loop(tcp, s, Transport::Tcp)));
        if let Some(ws) = ws {
            let s = shared.clone();
            acceptors.push(thread::spawn(move || accept_loop(ws, s, Transport::Web)));
        }
        Ok(Server {
            tcp_addr,
            ws_addr,
            shared,
            acceptors,
        })
    }

    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp_addr
    }

    pub fn ws_addr(&self) -> Option<SocketAddr> {
        self.ws_addr
    }

    pub fn log_dir(&self) -> &Path {
        &self.shared.log_dir
    }

    pub fn room_stats(&self, room_id: &str) -> Option<Arc<RoomStats>> {
        let rooms = self.shared.rooms.lock().unwrap();
        rooms.get(room_id).map(|r| r.stats.clone())
    }

    /// Asks the room actor for its current state. Commands queued before
    /// this call are reflected in the answer.
    pub fn room_snapshot(&self, room_id: &str) -> Option<RoomSnapshot> {
        let tx = self.shared.rooms.lock().unwrap().get(room_id)?.tx.clone();
        let (reply, rx) = mpsc::channel();
        tx.send(RoomCmd::Snapshot { reply }).ok()?;
        rx.recv_timeout(Duration::from_secs(10)).ok()
    }

    /// Blocks until the acceptors exit, which only happens on shutdown.
    pub fn wait(self) {
        for t in self.acceptors {
            let _ = t.join();
        }
    }

    /// Stops accepting, closes every connection and stops every room.
    pub fn shutdown(self) {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        for (_, s) in self.shared.sockets.lock().unwrap().drain() {
            let _ = s.shutdown(Shutdown::Both);
        }
        for (_, room) in self.shared.rooms.lock().unwrap().drain() {
            let _ = room.tx.send(RoomCmd::Stop);
        }
        let actors: Vec<_> = self.shared.actors.lock().unwrap().drain(..).collect();
        for t in actors {
            let _ = t.join();
        }
        self.wait();
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Room ids double as file names, so they are kept to a safe alphabet.
pub fn valid_room_id(id: &str) -> bool {
    (1..=64).contains(&id.len()) && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn control(room_id: &str, to: Option<PlayerId>, payload: Message) -> Arc<str> {
    let env = Envelope {
        seq: 0,
        room_id: room_id.into(),
        sender: Sender::Server,
        to,
        sent_at: now_ms(),
        payload,
    };
    encode_message(&env).into()
}

fn error_line(room_id: &str, code: ErrorCode, text: impl Into<String>) -> Arc<str> {
    control(room_id, None, Message::ErrorReply { code, text: text.into() })
}

// ---------------------------------------------------------------- rooms

impl Shared {
    fn room(self: &Arc<Self>, room_id: &str) -> Result<RoomHandle, (ErrorCode, String)> {
        let mut rooms = self.rooms.lock().unwrap();
        if let Some(room) = rooms.get(room_id) {
            if room.stats.is_closed() {
                return Err((ErrorCode::RoomClosed, format!("room {room_id} is closed")));
            }
            return Ok(room.clone());
        }
        let log = SessionLog::create(&self.log_dir, room_id)
            .map_err(|e| (ErrorCode::RoomClosed, format!("cannot open room log: {e}")))?;
        let (tx, rx) = mpsc::channel();
        let stats = Arc::new(RoomStats::default());
        let actor = RoomActor {
            state: RoomState::new(room_id, self.config.clone(), self.seed),
            log,
            conns: BTreeMap::new(),
            next_player: 1,
            stats: stats.clone(),
        };
        let t = thread::spawn(move || actor.run(rx));
        self.actors.lock().unwrap().push(t);
        let handle = RoomHandle { tx, stats };
        rooms.insert(room_id.into(), handle.clone());
        Ok(handle)
    }
}

struct ConnEntry {
    outbox: Outbox,
    player: Option<PlayerId>,
}

struct RoomActor {
    state: RoomState,
    log: SessionLog,
    conns: BTreeMap<ConnId, ConnEntry>,
    next_player: u64,
    stats: Arc<RoomStats>,
}

impl RoomActor {
    fn run(mut self, rx: mpsc::Receiver<RoomCmd>) {
        while let Ok(cmd) = rx.recv() {
            let ok = match cmd {
                RoomCmd::Connect { conn, outbox } => {
                    self.conns.insert(conn, ConnEntry { outbox, player: None });
                    true
                }
                RoomCmd::Input {
                    conn,
                    envelope,
                    received_at,
                } => {
                    let ok = self.input(conn, envelope, received_at);
                    self.stats.applied.fetch_add(1, Ordering::SeqCst);
                    ok
                }
                RoomCmd::Disconnect { conn } => self.disconnect(conn),
                RoomCmd::Snapshot { reply } => {
                    let _ = reply.send(RoomSnapshot {
                        state_json: self.state.snapshot_json(),
                        score: self.state.score(),
                        last_seq: self.state.next_seq() - 1,
                        log_bytes: self.log.bytes_written(),
                    });
                    true
                }
                RoomCmd::Stop => break,
            };
            if !ok {
                return;
            }
        }
    }

    fn input(&mut self, conn: ConnId, mut env: Envelope, received_at: u64) -> bool {
        let Some(entry) = self.conns.get(&conn) else {
            return true;
        };
        let is_join = matches!(env.payload, Message::Join { .. });
        let player = match (&entry.player, is_join) {
            (Some(p), _) => p.clone(),
            (None, true) => {
                let id = PlayerId::new(format!("p{}", self.next_player));
                self.next_player += 1;
                id
            }
            (None, false) => {
                let line = error_line(self.state.room_id(), ErrorCode::NotJoined, "send join first");
                let _ = entry.outbox.send(Outgoing::Line(line));
                return true;
            }
        };
        env.seq = 0;
        env.sender = Sender::Player(player.clone());
        env.to = None;
        env.sent_at = received_at;
        self.step(&env, Some((conn, &player)))
    }

    fn disconnect(&mut self, conn: ConnId) -> bool {
        let Some(entry) = self.conns.remove(&conn) else {
            return true;
        };
        let Some(player) = entry.player else {
            return true;
        };
        if self.state.player(&player).is_none() {
            return true;
        }
        let env = Envelope::client(self.state.room_id().to_string(), player, now_ms(), Message::Leave);
        self.step(&env, None)
    }

    /// Applies, logs, then delivers. `origin` is the connection that sent
    /// the input, used to route replies to a player id it does not own yet.
    fn step(&mut self, env: &Envelope, origin: Option<(ConnId, &PlayerId)>) -> bool {
        let outputs = self.state.apply_event(env);
        if let Err(e) = self.log.persist_step(env, &outputs) {
            self.close(&format!("room log failed: {e}"));
            return false;
        }
        if let Some((conn, player)) = origin {
            if let Some(entry) = self.conns.get_mut(&conn) {
                let member = self.state.player(player).is_some();
                if member && entry.player.is_none() {
                    entry.player = Some(player.clone());
                } else if !member && entry.player.as_ref() == Some(player) {
                    entry.player = None;
                }
            }
        }
        for out in &outputs {
            let line: Arc<str> = encode_message(out).into();
            match &out.to {
                Some(to) => {
                    let target = self
                        .conns
                        .iter()
                        .find(|(_, c)| c.player.as_ref() == Some(to))
                        .map(|(id, _)| *id)
                        .or(origin.filter(|(_, p)| *p == to).map(|(c, _)| c));
                    if let Some(c) = target.and_then(|id| self.conns.get(&id)) {
                        let _ = c.outbox.send(Outgoing::Line(line));
                    }
                }
                None => {
                    for c in self.conns.values().filter(|c| c.player.is_some()) {
                        let _ = c.outbox.send(Outgoing::Line(line.clone()));
                    }
                }
            }
        }
        if let Some(last) = outputs.last() {
            self.stats.last_seq.store(last.seq, Ordering::SeqCst);
        }
        self.stats.score.store(self.state.score(), Ordering::SeqCst);
        true
    }

    fn close(&mut self, reason: &str) {
        self.stats.closed.store(true, Ordering::SeqCst);
        let line = error_line(self.state.room_id(), ErrorCode::RoomClosed, reason);
        for c in self.conns.values() {
            let _ = c.outbox.send(Outgoing::Line(line.clone()));
            let _ = c.outbox.send(Outgoing::Close);
        }
    }
}

// ---------------------------------------------------------- connections

#[derive(Clone, Copy)]
enum Transport {
    Tcp,
    Web,
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, transport: Transport) {
    while !shared.shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let _ = stream.set_nonblocking(false);
                let _ = stream.set_nodelay(true);
                let shared = shared.clone();
                thread::spawn(move || match transport {
                    Transport::Tcp => serve_tcp(stream, shared),
                    Transport::Web => serve_web(stream, shared),
                });
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(10)),
            Err(_) => thread::sleep(Duration::from_millis(10)),
        }
    }
}

/// Per-connection routing state, shared by both transports.
struct Session {
    conn: ConnId,
    outbox: Outbox,
    room: Option<(String, RoomHandle)>,
    shared: Arc<Shared>,
}

impl Session {
    fn new(shared: Arc<Shared>, outbox: Outbox, socket: Option<TcpStream>) -> Self {
        let conn = shared.next_conn.fetch_add(1, Ordering::SeqCst);
        if let Some(s) = socket {
            shared.sockets.lock().unwrap().insert(conn, s);
        }
        Session {
            conn,
            outbox,
            room: None,
            shared,
        }
    }

    fn room_id(&self) -> &str {
        self.room.as_ref().map(|(id, _)| id.as_str()).unwrap_or("")
    }

    fn reply(&self, line: Arc<str>) {
        let _ = self.outbox.send(Outgoing::Line(line));
    }

    fn on_line(&mut self, bytes: &[u8]) {
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return;
        }
        let env = match decode_message(bytes) {
            Ok(env) => env,
            Err(e) => return self.reply(error_line(self.room_id(), ErrorCode::Malformed, e.to_string())),
        };
        match env.payload {
            Message::Ping => return self.reply(control(self.room_id(), None, Message::Pong)),
            Message::Pong => return,
            _ => {}
        }
        if self.room.is_none() {
            if !valid_room_id(&env.room_id) {
                let text = "room ids are 1 to 64 characters of [A-Za-z0-9_-]";
                return self.reply(error_line("", ErrorCode::BadRoomId, text));
            }
            match self.shared.room(&env.room_id) {
                Ok(room) => {
                    let outbox = self.outbox.clone();
                    let _ = room.tx.send(RoomCmd::Connect { conn: self.conn, outbox });
                    self.room = Some((env.room_id.clone(), room));
                }
                Err((code, text)) => return self.reply(error_line(&env.room_id, code, text)),
            }
        }
        let (room_id, room) = self.room.as_ref().expect("attached above");
        let cmd = RoomCmd::Input {
            conn: self.conn,
            envelope: env,
            received_at: now_ms(),
        };
        if room.tx.send(cmd).is_err() {
            self.reply(error_line(room_id, ErrorCode::RoomClosed, "room is closed"));
        }
    }

    fn heartbeat_line(&self) -> Arc<str> {
        control(self.room_id(), None, Message::Ping)
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Some((_, room)) = &self.room {
            let _ = room.tx.send(RoomCmd::Disconnect { conn: self.conn });
        }
        self.shared.sockets.lock().unwrap().remove(&self.conn);
        let _ = self.outbox.send(Outgoing::Close);
    }
}

fn serve_tcp(stream: TcpStream, shared: Arc<Shared>) {
    let (tx, rx) = mpsc::channel();
    let Ok(write_half) = stream.try_clone() else {
        return;
    };
    let heartbeat = shared.heartbeat;
    let idle_timeout = shared.idle_timeout;
    let mut session = Session::new(shared.clone(), tx, stream.try_clone().ok());
    let room_hint = Arc::new(Mutex::new(String::new()));
    let hint = room_hint.clone();
    let writer = thread::spawn(move || tcp_writer(write_half, rx, heartbeat, hint));

    let _ = stream.set_read_timeout(Some(POLL.min(heartbeat)));
    let mut reader = BufReader::new(stream);
    let mut buf = Vec::new();
    let mut last_rx = Instant::now();
    loop {
        if shared.shutdown.load(Ordering::SeqCst) {
            break;
        }
        let before = buf.len();
        match (&mut reader).take((MAX_LINE_BYTES + 1 - buf.len()) as u64).read_until(b'\n', &mut buf) {
            Ok(0) if buf.len() == before => break,
            Ok(_) if buf.ends_with(b"\n") => {
                last_rx = Instant::now();
                session.on_line(&buf);
                buf.clear();
                *room_hint.lock().unwrap() = session.room_id().to_string();
            }
            Ok(_) if buf.len() > MAX_LINE_BYTES => {
                session.reply(error_line(session.room_id(), ErrorCode::Malformed, "line too long"));
                break;
            }
            Ok(_) => last_rx = Instant::now(),
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                if buf.len() > before {
                    last_rx = Instant::now();
                }
                if last_rx.elapsed() >= idle_timeout {
                    break;
                }
            }
            Err(_) => break,
        }
    }
    drop(session);
    let _ = writer.join();
    let _ = reader.get_ref().shutdown(Shutdown::Both);
}

fn tcp_writer(mut stream: TcpStream, rx: mpsc::Receiver<Outgoing>, heartbeat: Duration, room: Arc<Mutex<String>>) {
    let mut last_ping = Instant::now();
    loop {
        let wait = heartbeat.saturating_sub(last_ping.elapsed());
        let line = match rx.recv_timeout(wait) {
            Ok(Outgoing::Line(line)) => line,
            Ok(Outgoing::Close) | Err(RecvTimeoutError::Disconnected) => break,
            Err(RecvTimeoutError::Timeout) => {
                last_ping = Instant::now();
                control(&room.lock().unwrap(), None, Message::Ping)
            }
        };
        if stream.write_all(line.as_bytes()).is_err() {
            let _ = stream.shutdown(Shutdown::Both);
            break;
        }
    }
    let _ = stream.flush();
    let _ = stream.shutdown(Shutdown::Write);
}

// ------------------------------------------------------ websocket + http

fn serve_web(stream: TcpStream, shared: Arc<Shared>) {
    let Some(head) = peek_request_head(&stream) else {
        return;
    };
    let lower = head.to_ascii_lowercase();
    let is_upgrade = lower
        .lines()
        .any(|l| l.starts_with("upgrade:") && l.contains("websocket"));
    if is_upgrade {
        serve_ws(stream, shared);
    } else {
        serve_static(stream, &head, shared.web_root.as_deref());
    }
}

/// Reads the request head without consuming it, so the WebSocket handshake
/// can still see the whole request.
fn peek_request_head(stream: &TcpStream) -> Option<String> {
    let _ = stream.set_read_timeout(Some(Duration::from_secs(5)));
    let mut buf = vec![0u8; 8192];
    let deadline = Instant::now() + Duration::from_secs(5);
    loop {
        let n = stream.peek(&mut buf).ok()?;
        if n == 0 {
            return None;
        }
        if let Some(end) = buf[..n].windows(4).position(|w| w == b"\r\n\r\n") {
            return Some(String::from_utf8_lossy(&buf[..end + 4]).into_owned());
        }
        if n == buf.len() || Instant::now() > deadline {
            return None;
        }
        thread::sleep(Duration::from_millis(2));
    }
}

fn serve_ws(stream: TcpStream, shared: Arc<Shared>) {
    let _ = stream.set_read_timeout(None);
    let socket_copy = stream.try_clone().ok();
    let Ok(mut ws) = tungstenite::accept(stream) else {
        return;
    };
    let _ = ws.get_ref().set_read_timeout(Some(WS_POLL));
    let (tx, rx) = mpsc::channel();
    let mut session = Session::new(shared.clone(), tx, socket_copy);
    let mut last_rx = Instant::now();
    let mut last_ping = Instant::now();

    'conn: loop {
        if shared.shutdown.load(Ordering::SeqCst) {
            break;
        }
        loop {
            match rx.try_recv() {
                Ok(Outgoing::Line(line)) => {
                    let text = line.trim_end_matches('\n').to_string();
                    if ws.write(tungstenite::Message::text(text)).is_err() {
                        break 'conn;
                    }
                }
                Ok(Outgoing::Close) => {
                    let _ = ws.flush();
                    let _ = ws.close(None);
                    let _ = ws.flush();
                    break 'conn;
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => break 'conn,
            }
        }
        if last_ping.elapsed() >= shared.heartbeat {
            last_ping = Instant::now();
            let text = session.heartbeat_line().trim_end_matches('\n').to_string();
            let _ = ws.write(tungstenite::Message::text(text));
        }
        match ws.flush() {
            Ok(()) => {}
            Err(tungstenite::Error::Io(e)) if e.kind() == io::ErrorKind::WouldBlock => {}
            Err(_) => break,
        }
        match ws.read() {
            Ok(tungstenite::Message::Text(t)) => {
                last_rx = Instant::now();
                session.on_line(t.as_bytes());
            }
            Ok(tungstenite::Message::Binary(b)) => {
                last_rx = Instant::now();
                session.on_line(&b);
            }
            Ok(tungstenite::Message::Close(_)) => break,
            Ok(_) => last_rx = Instant::now(),
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) =>
            {
                if last_rx.elapsed() >= shared.idle_timeout {
                    break;
                }
            }
            Err(_) => break,
        }
    }
    drop(session);
    let _ = ws.get_ref().shutdown(Shutdown::Both);
}

fn serve_static(mut stream: TcpStream, head: &str, web_root: Option<&Path>) {
    // consume the request head we peeked at
    let mut sink = vec![0u8; head.len()];
    let _ = stream.read_exact(&mut sink);

    let mut parts = head.lines().next().unwrap_or("").split_whitespace();
    let method = parts.next().unwrap_or("");
    let target = parts.next().unwrap_or("/");
    let response = if method != "GET" && method != "HEAD" {
        http_response(405, "Method Not Allowed", "text/plain", b"method not allowed\n".to_vec())
    } else {
        match web_root.and_then(|root| resolve_static(root, target)) {
            Some(path) => match std::fs::read(&path) {
                Ok(body) => http_response(200, "OK", content_type(&path), body),
                Err(_) => not_found(),
            },
            None => not_found(),
        }
    };
    let (header, body) = response;
    let _ = stream.write_all(header.as_bytes());
    if method != "HEAD" {
        let _ = stream.write_all(&body);
    }
    let _ = stream.flush();
    let _ = stream.shutdown(Shutdown::Both);
}

fn not_found() -> (String, Vec<u8>) {
    http_response(404, "Not Found", "text/plain", b"not found\n".to_vec())
}

fn http_response(code: u16, reason: &str, ctype: &str, body: Vec<u8>) -> (String, Vec<u8>) {
    let header = format!(
        "HTTP/1.1 {code} {reason}\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    (header, body)
}

/// Maps a request target to a file under `root`, refusing anything that
/// would step outside it.
pub fn resolve_static(root: &Path, target: &str) -> Option<PathBuf> {
    let path = target.split(['?', '#']).next().unwrap_or("/");
    let rel = Path::new(path.trim_start_matches('/'));
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    let mut full = root.join(rel);
    if full.is_dir() {
        full = full.join("index.html");
    }
    full.is_file().then_some(full)
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "txt" => "text/plain; charset=utf-8",
        "wasm" => "application/wasm",
        _ => "application/octet-stream",
    }
}
