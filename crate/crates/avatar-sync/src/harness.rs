//! Multi-client simulator.
//!
//! A scenario names a number of bots, the room mode and, per bot, a timed
//! script of client messages (or a seeded random policy that generates one).
//! Each send is delayed by a seeded latency model. Bots then drive an
//! embedded server over real TCP or WebSocket connections, or the reducer
//! directly in the in-process mode.
//!
//! Sends are released in delivery-time order and the driver waits for the
//! room to apply each one before releasing the next, so the order the server
//! sees is the order the latency model produced and the report is the same
//! on every run with the same seeds.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use avatar_sync_core::protocol::{decode_value, ClientGesture, PROTOCOL_VERSION};
use avatar_sync_core::types::{GameMode, SwipeDirection};
use avatar_sync_core::{
    decode_message, encode_message, Envelope, GestureEvent, Message, NarrativeConfig, PlayerId,
    RoomState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::log::{log_path, replay_bytes, SessionLog};
use crate::server::{valid_room_id, Server, ServerOptions};

pub const MAX_BOTS: usize = avatar_sync_core::session::MAX_PLAYERS;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
const DEFAULT_ROOM: &str = "sim";

// ------------------------------------------------------------- scenarios

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_room")]
    pub room_id: String,
    pub num_bots: usize,
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Story config, relative to the scenario file.
    #[serde(default)]
    pub config: Option<PathBuf>,
    /// Room seed used when the caller does not pass one.
    #[serde(default)]
    pub seed: u64,
    /// One list per bot; bots without a list stay idle.
    #[serde(default)]
    pub script: Vec<Vec<ScriptStep>>,
    #[serde(default)]
    pub random: Option<RandomPolicy>,
    #[serde(default)]
    pub latency: LatencyModel,
    #[serde(default)]
    pub expect: Expectations,
}

fn default_room() -> String {
    DEFAULT_ROOM.into()
}

fn default_mode() -> String {
    GameMode::Toques.as_str().into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStep {
    pub at_ms: u64,
    /// A client message: `tag` plus its fields, without envelope fields.
    pub send: Value,
}

/// Generates `actions_per_bot` short actions per bot, one every
/// `interval_ms`, appended after any scripted steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPolicy {
    pub seed: u64,
    pub actions_per_bot: usize,
    #[serde(default = "default_interval")]
    pub interval_ms: u64,
}

fn default_interval() -> u64 {
    50
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyModel {
    #[serde(default)]
    pub base_ms: u64,
    #[serde(default)]
    pub jitter_ms: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default)]
    pub final_score: Option<u32>,
    #[serde(default)]
    pub mission_complete: Option<bool>,
    /// Bounds on the number of sequenced envelopes the room emitted.
    #[serde(default)]
    pub min_events: Option<u64>,
    #[serde(default)]
    pub max_events: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario is not valid: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// One send after planning: which bot, when it was issued and what it is.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedSend {
    pub bot: usize,
    pub at_ms: u64,
    pub payload: Message,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Loads a scenario file. A relative `config` is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let mut s = Scenario::from_json(&std::fs::read_to_string(path)?)?;
        if let (Some(cfg), Some(dir)) = (&s.config, path.parent()) {
            if cfg.is_relative() {
                s.config = Some(dir.join(cfg));
            }
        }
        Ok(s)
    }

    pub fn game_mode(&self) -> GameMode {
        GameMode::parse(&self.mode).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(1..=MAX_BOTS).contains(&self.num_bots) {
            return Err(invalid("num_bots", format!("must be 1..={MAX_BOTS}")));
        }
        if !valid_room_id(&self.room_id) {
            return Err(invalid("room_id", "1 to 64 characters of [A-Za-z0-9_-]"));
        }
        if GameMode::parse(&self.mode).is_none() {
            return Err(invalid("mode", format!("unknown mode `{}`", self.mode)));
        }
        if self.script.len() > self.num_bots {
            return Err(invalid("script", "more scripts than bots"));
        }
        for (bot, steps) in self.script.iter().enumerate() {
            for (i, step) in steps.iter().enumerate() {
                let field = format!("script[{bot}][{i}]");
                if i > 0 && step.at_ms < steps[i - 1].at_ms {
                    return Err(invalid(field, "times must be non-decreasing"));
                }
                let payload = parse_send(&self.room_id, &step.send).map_err(|r| invalid(&field, r))?;
                if matches!(payload, Message::Join { .. }) {
                    return Err(invalid(field, "bots join automatically"));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (self.expect.min_events, self.expect.max_events) {
            if lo > hi {
                return Err(invalid("expect", "min_events > max_events"));
            }
        }
        Ok(())
    }

    /// Every send in issue order (by time, then bot, then script position).
    pub fn plan(&self) -> Vec<PlannedSend> {
        let mut sends = Vec::new();
        for (bot, steps) in self.script.iter().enumerate() {
            for step in steps {
                let payload = parse_send(&self.room_id, &step.send).expect("validated");
                sends.push(PlannedSend {
                    bot,
                    at_ms: step.at_ms,
                    payload,
                });
            }
        }
        if let Some(policy) = &self.random {
            let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
            for bot in 0..self.num_bots {
                let start = self
                    .script
                    .get(bot)
                    .and_then(|s| s.last())
                    .map_or(0, |s| s.at_ms + policy.interval_ms);
                for i in 0..policy.actions_per_bot {
                    let gesture = random_gesture(&mut rng);
                    sends.push(PlannedSend {
                        bot,
                        at_ms: start + i as u64 * policy.interval_ms,
                        payload: Message::Gesture(ClientGesture::Classified(gesture)),
                    });
                }
            }
        }
        // stable: keeps script order for equal (time, bot)
        sends.sort_by_key(|s| (s.at_ms, s.bot));
        sends
    }
}

fn random_gesture(rng: &mut ChaCha8Rng) -> GestureEvent {
    match rng.random_range(0..10u32) {
        n @ 0..=5 => GestureEvent::TapBurst { count: n + 1 },
        n => GestureEvent::Swipe {
            direction: SwipeDirection::ALL[(n - 6) as usize],
        },
    }
}

fn parse_send(room_id: &str, send: &Value) -> Result<Message, String> {
    let Value::Object(fields) = send else {
        return Err("`send` must be an object".into());
    };
    let mut env = serde_json::Map::new();
    env.insert("v".into(), PROTOCOL_VERSION.into());
    env.insert("seq".into(), 0.into());
    env.insert("room_id".into(), room_id.into());
    env.insert("sender".into(), "bot".into());
    env.insert("sent_at".into(), 0.into());
    for (k, v) in fields {
        env.insert(k.clone(), v.clone());
    }
    let env = decode_value(&Value::Object(env)).map_err(|e| e.to_string())?;
    if !env.payload.is_client_message() || matches!(env.payload, Message::Ping | Message::Pong) {
        return Err(format!("`{}` is not a client action", env.payload.tag()));
    }
    Ok(env.payload)
}

// --------------------------------------------------------------- latency

/// Delivery time for each `(connection, issue time)`: issue time plus
/// `base + uniform(0..=jitter)`, never earlier than the previous delivery
/// on the same connection. Delays are drawn in input order.
pub fn inject_latency(model: &LatencyModel, sends: &[(usize, u64)]) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let mut last: BTreeMap<usize, u64> = BTreeMap::new();
    sends
        .iter()
        .map(|&(conn, at)| {
            let delay = model.base_ms + rng.random_range(0..=model.jitter_ms);
            let prev = last.entry(conn).or_insert(0);
            *prev = (*prev).max(at + delay);
            *prev
        })
        .collect()
}

/// A planned send with its delivery time.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub deliver_ms: u64,
    pub send: PlannedSend,
}

/// The plan reordered by delivery time, ties broken by issue order.
pub fn schedule(scenario: &Scenario) -> Vec<Delivery> {
    let plan = scenario.plan();
    let keys: Vec<(usize, u64)> = plan.iter().map(|s| (s.bot, s.at_ms)).collect();
    let times = inject_latency(&scenario.latency, &keys);
    let mut out: Vec<Delivery> = plan
        .into_iter()
        .zip(times)
        .map(|(send, deliver_ms)| Delivery { deliver_ms, send })
        .collect();
    out.sort_by_key(|d| d.deliver_ms);
    out
}

// ------------------------------------------------------------------ bots

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    Tcp,
    Ws,
    InProcess,
}

impl TransportKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransportKind::Tcp => "tcp",
            TransportKind::Ws => "ws",
            TransportKind::InProcess => "in_process",
        }
    }
}

type Inbox = Arc<Mutex<Vec<Envelope>>>;

enum Link {
    Tcp(Arc<Mutex<TcpStream>>),
    Ws(mpsc::Sender<String>),
}

/// One simulated client connection.
struct Bot {
    link: Link,
    inbox: Inbox,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Bot {
    fn connect_tcp(addr: SocketAddr) -> std::io::Result<Bot> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(Duration::from_millis(20)))?;
        let writer = Arc::new(Mutex::new(stream.try_clone()?));
        let inbox: Inbox = Arc::default();
        let stop = Arc::new(AtomicBool::new(false));
        let (inbox2, stop2, writer2) = (inbox.clone(), stop.clone(), writer.clone());
        let thread = thread::spawn(move || {
            let mut reader = BufReader::new(stream);
            let mut buf = Vec::new();
            while !stop2.load(Ordering::SeqCst) {
                match reader.read_until(b'\n', &mut buf) {
                    Ok(0) => break,
                    Ok(_) if buf.ends_with(b"\n") => {
                        if let Some(reply) = receive(&buf, &inbox2) {
                            let _ = writer2.lock().unwrap().write_all(reply.as_bytes());
                        }
                        buf.clear();
                    }
                    Ok(_) => {}
                    Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
                    Err(_) => break,
                }
            }
            let _ = reader.get_ref().shutdown(std::net::Shutdown::Both);
        });
        Ok(Bot {
            link: Link::Tcp(writer),
            inbox,
            stop,
            thread: Some(thread),
        })
    }

    fn connect_ws(addr: SocketAddr) -> Result<Bot, HarnessError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let url = format!("ws://{addr}/");
        let (mut ws, _) = tungstenite::client(url, stream).map_err(|e| HarnessError::Connect(e.to_string()))?;
        ws.get_ref().set_read_timeout(Some(Duration::from_millis(5)))?;
        let (tx, rx) = mpsc::channel::<String>();
        let inbox: Inbox = Arc::default();
        let stop = Arc::new(AtomicBool::new(false));
        let (inbox2, stop2) = (inbox.clone(), stop.clone());
        let thread = thread::spawn(move || loop {
            while let Ok(line) = rx.try_recv() {
                let text = line.trim_end().to_string();
                if ws.send(tungstenite::Message::text(text)).is_err() {
                    return;
                }
            }
            if stop2.load(Ordering::SeqCst) {
                let _ = ws.close(None);
                let _ = ws.flush();
                return;
            }
            match ws.read() {
                Ok(tungstenite::Message::Text(t)) => {
                    if let Some(reply) = receive(t.as_bytes(), &inbox2) {
                        let _ = ws.send(tungstenite::Message::text(reply.trim_end().to_string()));
                    }
                }
                Ok(tungstenite::Message::Close(_)) => return,
                Ok(_) => {}
                Err(tungstenite::Error::Io(e))
                    if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
                Err(_) => return,
            }
        });
        Ok(Bot {
            link: Link::Ws(tx),
            inbox,
            stop,
            thread: Some(thread),
        })
    }

    fn send(&self, line: String) {
        match &self.link {
            Link::Tcp(w) => {
                let _ = w.lock().unwrap().write_all(line.as_bytes());
            }
            Link::Ws(tx) => {
                let _ = tx.send(line);
            }
        }
    }

    fn received(&self) -> Vec<Envelope> {
        self.inbox.lock().unwrap().clone()
    }

    fn has(&self, pred: impl Fn(&Envelope) -> bool) -> bool {
        self.inbox.lock().unwrap().iter().any(pred)
    }
}

impl Drop for Bot {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Records one incoming line. Returns a pong to send back for a ping.
fn receive(line: &[u8], inbox: &Inbox) -> Option<String> {
    let env = decode_message(line).ok()?;
    match env.payload {
        Message::Ping => Some(encode_message(&Envelope {
            payload: Message::Pong,
            ..env
        })),
        Message::Pong => None,
        _ => {
            inbox.lock().unwrap().push(env);
            None
        }
    }
}

// ------------------------------------------------------------------- run

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub transport: TransportKind,
    /// Room seed; the scenario's own seed when `None`.
    pub seed: Option<u64>,
    /// Where the room log goes; a temporary directory when `None`.
    pub log_dir: Option<PathBuf>,
    pub timeout: Duration,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            transport: TransportKind::Tcp,
            seed: None,
            log_dir: None,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("server: {0}")]
    Server(#[from] crate::server::ServeError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot connect: {0}")]
    Connect(String),
    #[error("timed out waiting for {what}")]
    Timeout { what: String },
    #[error("assertions failed: {}", which.join(", "))]
    AssertionFailed { which: Vec<String> },
}

/// What a run observed, independent of transport.
struct Recording {
    bots: Vec<BotRecord>,
    /// Last seq emitted while bots were still joining.
    join_end_seq: u64,
    /// Canonical room state after the last scripted send.
    state_json: String,
    server_score: u32,
    last_seq: u64,
    /// The log prefix that produced `state_json`.
    log: Vec<u8>,
    /// The whole log, including disconnects after the run.
    full_log: Vec<u8>,
}

struct BotRecord {
    player_id: Option<PlayerId>,
    received: Vec<Envelope>,
}

fn wait_for(timeout: Duration, what: impl Fn() -> String, mut done: impl FnMut() -> bool) -> Result<(), HarnessError> {
    let deadline = Instant::now() + timeout;
    while !done() {
        if Instant::now() > deadline {
            return Err(HarnessError::Timeout { what: what() });
        }
        thread::sleep(Duration::from_micros(200));
    }
    Ok(())
}

fn client_line(room_id: &str, bot: usize, payload: Message) -> String {
    let sender = PlayerId::new(format!("bot{bot}"));
    encode_message(&Envelope::client(room_id, sender, 0, payload))
}

/// Runs a scenario end to end and checks it.
pub fn run_scenario(
    scenario: &Scenario,
    config: Arc<NarrativeConfig>,
    opts: &RunOptions,
) -> Result<ScenarioReport, HarnessError> {
    scenario.validate()?;
    let seed = opts.seed.unwrap_or(scenario.seed);
    let tmp;
    let log_dir = match &opts.log_dir {
        Some(dir) => dir.clone(),
        None => {
            tmp = tempfile::tempdir()?;
            tmp.path().to_path_buf()
        }
    };
    let deliveries = schedule(scenario);
    let recording = match opts.transport {
        TransportKind::InProcess => record_in_process(scenario, &config, seed, &log_dir, &deliveries)?,
        transport => record_network(scenario, &config, seed, &log_dir, &deliveries, transport, opts.timeout)?,
    };
    Ok(build_report(scenario, &config, seed, opts.transport, &deliveries, &recording))
}

fn record_network(
    scenario: &Scenario,
    config: &Arc<NarrativeConfig>,
    seed: u64,
    log_dir: &Path,
    deliveries: &[Delivery],
    transport: TransportKind,
    timeout: Duration,
) -> Result<Recording, HarnessError> {
    let localhost: SocketAddr = "127.0.0.1:0".parse().expect("literal");
    let mut opts = ServerOptions::new(localhost, config.clone(), seed, log_dir);
    opts.heartbeat = Duration::from_secs(3600);
    opts.idle_timeout = Duration::from_secs(3600);
    if transport == TransportKind::Ws {
        opts.ws_bind = Some(localhost);
    }
    let server = Server::start(opts)?;
    let result = drive(&server, scenario, deliveries, transport, timeout);
    let room = &scenario.room_id;
    let outcome = result.and_then(|(bots, join_end_seq)| {
        let snap = server
            .room_snapshot(room)
            .ok_or_else(|| HarnessError::Timeout { what: "room snapshot".into() })?;
        // take every inbox before any bot disconnects and triggers a leave
        let records: Vec<BotRecord> = bots
            .iter()
            .map(|(player_id, bot)| BotRecord {
                player_id: player_id.clone(),
                received: bot.received(),
            })
            .collect();
        drop(bots);
        Ok((records, join_end_seq, snap))
    });
    server.shutdown();
    let (bots, join_end_seq, snap) = outcome?;
    let full_log = std::fs::read(log_path(log_dir, room))?;
    let log = full_log[..(snap.log_bytes as usize).min(full_log.len())].to_vec();
    Ok(Recording {
        bots,
        join_end_seq,
        state_json: snap.state_json,
        server_score: snap.score,
        last_seq: snap.last_seq,
        log,
        full_log,
    })
}

type ConnectedBots = Vec<(Option<PlayerId>, Bot)>;

fn drive(
    server: &Server,
    scenario: &Scenario,
    deliveries: &[Delivery],
    transport: TransportKind,
    timeout: Duration,
) -> Result<(ConnectedBots, u64), HarnessError> {
    let room = &scenario.room_id;
    let mut bots = Vec::new();
    for _ in 0..scenario.num_bots {
        let bot = match transport {
            TransportKind::Ws => Bot::connect_ws(server.ws_addr().expect("ws enabled"))?,
            _ => Bot::connect_tcp(server.tcp_addr())?,
        };
        bots.push((None, bot));
    }

    let mut sent = 0u64;
    let applied = |n: u64| {
        server
            .room_stats(room)
            .is_some_and(|s| s.applied() >= n)
    };
    for (i, (id, bot)) in bots.iter_mut().enumerate() {
        let name = format!("bot {i}");
        bot.send(client_line(room, i, Message::Join { display_name: name }));
        sent += 1;
        wait_for(timeout, || format!("join of bot {i}"), || applied(sent))?;
        wait_for(timeout, || format!("welcome for bot {i}"), || {
            bot.has(|e| matches!(e.payload, Message::Welcome { .. } | Message::ErrorReply { .. }))
        })?;
        *id = bot.received().into_iter().find_map(|e| match e.payload {
            Message::Welcome { player_id, .. } => Some(player_id),
            _ => None,
        });
    }
    let join_end_seq = server.room_stats(room).map_or(0, |s| s.last_seq());

    let mode = scenario.game_mode();
    if mode != GameMode::default() {
        bots[0].1.send(client_line(room, 0, Message::SelectMode(mode)));
        sent += 1;
        wait_for(timeout, || "mode selection".into(), || applied(sent))?;
    }

    let start = Instant::now();
    for d in deliveries {
        let due = start + Duration::from_millis(d.deliver_ms);
        if let Some(wait) = due.checked_duration_since(Instant::now()) {
            thread::sleep(wait);
        }
        bots[d.send.bot].1.send(client_line(room, d.send.bot, d.send.payload.clone()));
        sent += 1;
        wait_for(timeout, || format!("delivery {sent}"), || applied(sent))?;
    }

    // Every bot must have received every broadcast meant for it.
    let snap = server
        .room_snapshot(room)
        .ok_or_else(|| HarnessError::Timeout { what: "room snapshot".into() })?;
    let log = std::fs::read(log_path(server.log_dir(), room))?;
    let log = &log[..(snap.log_bytes as usize).min(log.len())];
    let broadcasts = log_broadcasts(log);
    for (i, (pid, bot)) in bots.iter().enumerate() {
        let Some(pid) = pid else { continue };
        let Some(last) = expected_for(&broadcasts, pid, join_end_seq).last().map(|e| e.seq) else {
            continue;
        };
        wait_for(timeout, || format!("broadcast {last} at bot {i}"), || bot.has(|e| e.seq == last))?;
    }
    Ok((bots, join_end_seq))
}

/// Mirrors the server's room actor without sockets: ids are handed out on
/// join attempts, broadcasts reach joined bots, direct replies reach their
/// addressee.
struct LocalRoom {
    room: RoomState,
    log: SessionLog,
    ids: Vec<Option<PlayerId>>,
    members: Vec<bool>,
    inboxes: Vec<Vec<Envelope>>,
    next_player: u64,
}

impl LocalRoom {
    fn step(&mut self, bot: usize, payload: Message, at: u64) -> std::io::Result<()> {
        let is_join = matches!(payload, Message::Join { .. });
        let id = match (&self.ids[bot], self.members[bot], is_join) {
            (Some(id), true, _) => id.clone(),
            (_, false, true) => {
                let id = PlayerId::new(format!("p{}", self.next_player));
                self.next_player += 1;
                id
            }
            _ => return Ok(()),
        };
        let env = Envelope::client(self.room.room_id().to_string(), id.clone(), at, payload);
        let outputs = self.room.apply_event(&env);
        self.log.persist_step(&env, &outputs)?;
        let member = self.room.player(&id).is_some();
        if member {
            self.ids[bot] = Some(id.clone());
        }
        self.members[bot] = member;
        let n = self.ids.len();
        for out in outputs {
            match &out.to {
                Some(to) if *to == id => self.inboxes[bot].push(out),
                Some(to) => {
                    let target = (0..n).find(|b| self.members[*b] && self.ids[*b].as_ref() == Some(to));
                    if let Some(b) = target {
                        self.inboxes[b].push(out);
                    }
                }
                None => {
                    for b in (0..n).filter(|b| self.members[*b]) {
                        self.inboxes[b].push(out.clone());
                    }
                }
            }
        }
        Ok(())
    }
}

fn record_in_process(
    scenario: &Scenario,
    config: &Arc<NarrativeConfig>,
    seed: u64,
    log_dir: &Path,
    deliveries: &[Delivery],
) -> Result<Recording, HarnessError> {
    let room_id = &scenario.room_id;
    let n = scenario.num_bots;
    let mut local = LocalRoom {
        room: RoomState::new(room_id.clone(), config.clone(), seed),
        log: SessionLog::create(log_dir, room_id)?,
        ids: vec![None; n],
        members: vec![false; n],
        inboxes: vec![Vec::new(); n],
        next_player: 1,
    };
    for bot in 0..n {
        local.step(bot, Message::Join { display_name: format!("bot {bot}") }, 0)?;
    }
    let join_end_seq = local.room.next_seq() - 1;
    let mode = scenario.game_mode();
    if mode != GameMode::default() {
        local.step(0, Message::SelectMode(mode), 0)?;
    }
    for d in deliveries {
        local.step(d.send.bot, d.send.payload.clone(), d.deliver_ms)?;
    }

    let full_log = std::fs::read(log_path(log_dir, room_id))?;
    Ok(Recording {
        bots: local
            .ids
            .into_iter()
            .zip(local.inboxes)
            .map(|(player_id, received)| BotRecord { player_id, received })
            .collect(),
        join_end_seq,
        state_json: local.room.snapshot_json(),
        server_score: local.room.score(),
        last_seq: local.room.next_seq() - 1,
        log: full_log.clone(),
        full_log,
    })
}

// ---------------------------------------------------------------- checks

fn log_broadcasts(log: &[u8]) -> Vec<Envelope> {
    log.split(|b| *b == b'\n')
        .filter_map(|l| decode_message(l).ok())
        .filter(|e| e.seq > 0 && e.to.is_none())
        .collect()
}

/// Broadcasts after the join phase that `player` should have received: up
/// to its own departure, if it left.
fn expected_for(broadcasts: &[Envelope], player: &PlayerId, after: u64) -> Vec<Envelope> {
    let mut out = Vec::new();
    for e in broadcasts.iter().filter(|e| e.seq > after) {
        if let Message::PlayerLeft { player_id } = &e.payload {
            if player_id == player {
                break;
            }
        }
        out.push(e.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotSummary {
    pub bot: usize,
    pub player_id: Option<String>,
    pub color: Option<String>,
    /// Sequenced envelopes received.
    pub received: usize,
    /// Broadcast seqs after the join phase, in arrival order.
    pub stream: Vec<u64>,
}

/// Outcome of one run. Holds no wall-clock values, so equal inputs give
/// equal reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub transport: String,
    pub seed: u64,
    pub latency: LatencyModel,
    pub sends: usize,
    pub events: u64,
    pub final_score: u32,
    pub oracle_score: u32,
    pub mission_complete: bool,
    pub bots: Vec<BotSummary>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ScenarioReport {
    pub fn failed(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect()
    }

    pub fn into_result(self) -> Result<ScenarioReport, HarnessError> {
        let which = self.failed();
        if which.is_empty() {
            Ok(self)
        } else {
            Err(HarnessError::AssertionFailed { which })
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

/// Score a client would compute from what it saw.
pub fn oracle_score(stream: &[Envelope]) -> u32 {
    stream
        .iter()
        .map(|e| match &e.payload {
            Message::ActionBroadcast { points, .. } => *points,
            Message::MinigameUpdate(s) => s.awarded.unwrap_or(0),
            _ => 0,
        })
        .sum()
}

fn build_report(
    scenario: &Scenario,
    config: &Arc<NarrativeConfig>,
    seed: u64,
    transport: TransportKind,
    deliveries: &[Delivery],
    rec: &Recording,
) -> ScenarioReport {
    let mut checks = Vec::new();
    let broadcasts = log_broadcasts(&rec.log);

    // (a) every bot saw the same broadcasts in the same order
    let mut summaries = Vec::new();
    let mut mismatched = Vec::new();
    for (i, bot) in rec.bots.iter().enumerate() {
        let seqs: Vec<u64> = bot.received.iter().filter(|e| e.seq > 0).map(|e| e.seq).collect();
        let stream: Vec<&Envelope> = bot
            .received
            .iter()
            .filter(|e| e.seq > rec.join_end_seq && e.to.is_none())
            .collect();
        let ordered = seqs.windows(2).all(|w| w[0] < w[1]);
        let same = match &bot.player_id {
            Some(pid) => {
                let expected = expected_for(&broadcasts, pid, rec.join_end_seq);
                expected.len() == stream.len()
                    && expected
                        .iter()
                        .zip(&stream)
                        .all(|(a, b)| encode_message(a) == encode_message(b))
            }
            None => stream.is_empty(),
        };
        if !(ordered && same) {
            mismatched.push(i);
        }
        let color = bot.received.iter().find_map(|e| match &e.payload {
            Message::Welcome { color, .. } => Some(color.as_str().to_string()),
            _ => None,
        });
        summaries.push(BotSummary {
            bot: i,
            player_id: bot.player_id.as_ref().map(|p| p.to_string()),
            color,
            received: seqs.len(),
            stream: stream.iter().map(|e| e.seq).collect(),
        });
    }
    checks.push(check(
        "identical_streams",
        mismatched.is_empty(),
        if mismatched.is_empty() {
            format!("{} bots agree on {} broadcasts", rec.bots.len(), broadcasts.iter().filter(|e| e.seq > rec.join_end_seq).count())
        } else {
            format!("bots {mismatched:?} diverge from the room log")
        },
    ));

    // (c) invariants over the room's broadcast stream
    let totals: Vec<u32> = broadcasts
        .iter()
        .filter_map(|e| match e.payload {
            Message::ScoreUpdate { total } => Some(total),
            _ => None,
        })
        .collect();
    let monotone = totals.windows(2).all(|w| w[0] <= w[1]);
    checks.push(check("score_monotone", monotone, format!("{} score updates", totals.len())));

    let target = config.mission_target;
    let completions: Vec<(usize, u32)> = broadcasts
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match e.payload {
            Message::MissionComplete { final_total } => Some((i, final_total)),
            _ => None,
        })
        .collect();
    let first_reach = totals.iter().copied().find(|t| *t >= target);
    let single = match completions.as_slice() {
        [] => first_reach.is_none(),
        [(i, total)] => {
            Some(*total) == first_reach
                && *i > 0
                && broadcasts[i - 1].payload == Message::ScoreUpdate { total: *total }
        }
        _ => false,
    };
    checks.push(check(
        "single_mission_complete",
        single,
        format!("{} mission_complete events", completions.len()),
    ));

    let mut members: BTreeMap<PlayerId, String> = BTreeMap::new();
    let mut colors_ok = true;
    for e in &broadcasts {
        match &e.payload {
            Message::PlayerJoined { player_id, color } => {
                if members.values().any(|c| c == color.as_str()) {
                    colors_ok = false;
                }
                members.insert(player_id.clone(), color.as_str().into());
            }
            Message::PlayerLeft { player_id } => {
                members.remove(player_id);
            }
            _ => {}
        }
    }
    let welcomed: Vec<&String> = summaries.iter().filter_map(|s| s.color.as_ref()).collect();
    let distinct: BTreeSet<&&String> = welcomed.iter().collect();
    colors_ok &= distinct.len() == welcomed.len();
    checks.push(check("color_uniqueness", colors_ok, format!("{} colors assigned", welcomed.len())));

    // score seen by a client equals the server's
    let observer = rec
        .bots
        .iter()
        .find(|b| b.player_id.as_ref().is_some_and(|p| !broadcasts.iter().any(|e| e.payload == Message::PlayerLeft { player_id: p.clone() })));
    let observed: Vec<Envelope> = match observer {
        Some(b) => b.received.iter().filter(|e| e.to.is_none()).cloned().collect(),
        None => broadcasts.clone(),
    };
    let oracle = oracle_score(&observed);
    let last_total = observed
        .iter()
        .rev()
        .find_map(|e| match e.payload {
            Message::ScoreUpdate { total } => Some(total),
            _ => None,
        })
        .unwrap_or(0);
    checks.push(check(
        "score_oracle",
        oracle == rec.server_score && last_total == rec.server_score,
        format!("oracle {oracle}, last score_update {last_total}, server {}", rec.server_score),
    ));

    // the log replays to the same state
    let replay = replay_bytes(&rec.log, &scenario.room_id, config.clone(), seed);
    let full = replay_bytes(&rec.full_log, &scenario.room_id, config.clone(), seed);
    let (replay_ok, detail) = match (&replay, &full) {
        (Ok(r), Ok(_)) if r.state.snapshot_json() == rec.state_json => (true, format!("{} steps", r.steps)),
        (Ok(_), Ok(_)) => (false, "replayed state differs".into()),
        (Err(e), _) | (_, Err(e)) => (false, e.to_string()),
    };
    checks.push(check("replay", replay_ok, detail));

    // (b) scenario expectations
    let mission_complete = !completions.is_empty();
    let events = rec.last_seq;
    let e = &scenario.expect;
    if let Some(want) = e.final_score {
        checks.push(check(
            "expect_final_score",
            rec.server_score == want,
            format!("expected {want}, got {}", rec.server_score),
        ));
    }
    if let Some(want) = e.mission_complete {
        checks.push(check(
            "expect_mission_complete",
            mission_complete == want,
            format!("expected {want}, got {mission_complete}"),
        ));
    }
    if e.min_events.is_some() || e.max_events.is_some() {
        let lo = e.min_events.unwrap_or(0);
        let hi = e.max_events.unwrap_or(u64::MAX);
        checks.push(check(
            "expect_events",
            (lo..=hi).contains(&events),
            format!("{events} events, bounds {lo}..={hi}"),
        ));
    }

    let pass = checks.iter().all(|c| c.pass);
    ScenarioReport {
        scenario: scenario.name.clone(),
        transport: transport.as_str().into(),
        seed,
        latency: scenario.latency,
        sends: deliveries.len(),
        events,
        final_score: rec.server_score,
        oracle_score: oracle,
        mission_complete,
        bots: summaries,
        checks,
        pass,
    }
}
