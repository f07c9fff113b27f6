//! Live session over real sockets: a TCP stream for the reliable channel, UDP
//! for datagrams, and optionally the WebSocket gateway. Reader threads turn
//! traffic into [`Event`]s; one owner thread applies them to the
//! [`SessionHost`].

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr, SocketAddr, TcpListener, TcpStream, ToSocketAddrs, UdpSocket};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::agent::{Agent, AgentPolicy, AgentTiming};
use super::client::ClientCore;
use super::config::{Config, ConfigError};
use super::gateway;
use super::host::{HostConfig, SessionHost, write_session_logs};
use crate::board::{BoardSpec, BoardState};
use crate::geometry::WorkspaceVolume;
use crate::protocol::{
    Channel, ClickMode, Frame, HEADER_LEN, MAX_PAYLOAD, Message, Phase, ProtocolError, Reject, RejectCode, decode,
    decode_header, encode, to_text,
};
use crate::tasks::{EventLog, LogError, PuzzleError, RuleSet};
use crate::Role;

const POLL: Duration = Duration::from_millis(20);
/// How long the server keeps running after the last task so final frames drain.
const LINGER: Duration = Duration::from_millis(300);

#[derive(Debug, thiserror::Error)]
pub enum LiveError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("websocket handshake failed: {0}")]
    Handshake(String),
    #[error("server rejected the client: {0}")]
    Rejected(String),
    #[error("server closed the connection in phase before completion")]
    Disconnected,
    #[error("gave up after {0:?}")]
    TimedOut(Duration),
}

pub(crate) type ConnId = u64;

pub(crate) enum Sink {
    Tcp(TcpStream),
    Text(Sender<String>),
}

impl Sink {
    fn send(&mut self, frame: &Frame) -> io::Result<()> {
        match self {
            Sink::Tcp(s) => s.write_all(&encode(frame).map_err(io::Error::other)?),
            Sink::Text(tx) => tx.send(to_text(frame)).map_err(|_| io::ErrorKind::BrokenPipe.into()),
        }
    }
}

pub(crate) enum Event {
    Connected { conn: ConnId, peer: SocketAddr, sink: Sink },
    Frame { conn: ConnId, frame: Frame },
    Datagram { from: SocketAddr, frame: Frame },
    Disconnected { conn: ConnId },
}

/// Reads one frame from a stream; `Ok(None)` on a clean end of stream.
pub fn read_frame(stream: &mut impl Read) -> Result<Option<Frame>, LiveError> {
    let mut buf = vec![0u8; HEADER_LEN];
    match stream.read_exact(&mut buf) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let header = decode_header(&buf)?;
    if header.len as usize > MAX_PAYLOAD {
        return Err(ProtocolError::Oversize("frame payload").into());
    }
    buf.resize(HEADER_LEN + header.len as usize, 0);
    stream.read_exact(&mut buf[HEADER_LEN..])?;
    Ok(Some(decode(&buf)?))
}

fn bind_tcp(addr: &str) -> Result<TcpListener, LiveError> {
    TcpListener::bind(addr).map_err(|source| LiveError::BindFailure { addr: addr.into(), source })
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub tcp: String,
    pub udp: String,
    pub gateway: Option<String>,
    pub host: HostConfig,
    pub log_dir: Option<PathBuf>,
}

impl ServeOptions {
    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Self {
            tcp: cfg.server.tcp.clone(),
            udp: cfg.server.udp.clone(),
            gateway: Some(cfg.server.gateway.clone()),
            host: cfg.host_config()?,
            log_dir: None,
        })
    }

    /// Loopback on ephemeral ports, for tests and examples.
    pub fn loopback(host: HostConfig) -> Self {
        let any = "127.0.0.1:0".to_string();
        Self { tcp: any.clone(), udp: any.clone(), gateway: Some(any), host, log_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerStatus {
    pub phase: Phase,
    pub participants: usize,
    pub refused: usize,
}

#[derive(Debug, Clone)]
pub struct ServeReport {
    pub phase: Phase,
    /// Finished task logs, training first.
    pub logs: Vec<EventLog>,
    pub log_files: Vec<PathBuf>,
    pub refused: usize,
}

/// A bound but not yet running session server.
pub struct Server {
    tcp: TcpListener,
    udp: UdpSocket,
    gateway: Option<TcpListener>,
    opts: ServeOptions,
    status: Arc<Mutex<ServerStatus>>,
}

impl Server {
    pub fn bind(opts: ServeOptions) -> Result<Self, LiveError> {
        let tcp = bind_tcp(&opts.tcp)?;
        let udp = UdpSocket::bind(&opts.udp).map_err(|source| LiveError::BindFailure { addr: opts.udp.clone(), source })?;
        let gateway = opts.gateway.as_deref().map(bind_tcp).transpose()?;
        let status = ServerStatus { phase: Phase::Lobby, participants: 0, refused: 0 };
        Ok(Self { tcp, udp, gateway, opts, status: Arc::new(Mutex::new(status)) })
    }

    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp.local_addr().expect("bound")
    }

    pub fn udp_addr(&self) -> SocketAddr {
        self.udp.local_addr().expect("bound")
    }

    pub fn gateway_addr(&self) -> Option<SocketAddr> {
        self.gateway.as_ref().map(|g| g.local_addr().expect("bound"))
    }

    pub fn status(&self) -> Arc<Mutex<ServerStatus>> {
        Arc::clone(&self.status)
    }

    /// Runs on a background thread; see [`RunningServer::stop`].
    pub fn spawn(self) -> RunningServer {
        let shutdown = Arc::new(AtomicBool::new(false));
        let status = self.status();
        let flag = Arc::clone(&shutdown);
        let thread = thread::spawn(move || self.run(&flag));
        RunningServer { shutdown, status, thread }
    }

    /// Serves one session until it is done or `shutdown` is set, then writes
    /// the logs if a log directory is configured.
    pub fn run(self, shutdown: &Arc<AtomicBool>) -> Result<ServeReport, LiveError> {
        let (tx, rx) = mpsc::channel();
        let mut threads = Vec::new();
        threads.push(accept_loop(self.tcp, tx.clone(), Arc::clone(shutdown), 0, tcp_connection)?);
        if let Some(g) = self.gateway {
            threads.push(accept_loop(g, tx.clone(), Arc::clone(shutdown), 1 << 32, gateway::serve_connection)?);
        }
        let udp_out = self.udp.try_clone()?;
        threads.push(udp_loop(self.udp, tx, Arc::clone(shutdown))?);

        let mut owner = Owner::new(self.opts.host.clone(), udp_out, self.status);
        let result = owner.run(&rx, shutdown);
        shutdown.store(true, Ordering::Relaxed);
        drop(owner.conns);
        for t in threads {
            let _ = t.join();
        }
        result?;
        let logs = owner.host.logs().to_vec();
        let log_files = match &self.opts.log_dir {
            Some(dir) => write_session_logs(dir, self.opts.host.pair_id, &logs)?,
            None => Vec::new(),
        };
        Ok(ServeReport { phase: owner.host.state().phase, logs, log_files, refused: owner.refused })
    }
}

pub struct RunningServer {
    shutdown: Arc<AtomicBool>,
    status: Arc<Mutex<ServerStatus>>,
    thread: JoinHandle<Result<ServeReport, LiveError>>,
}

impl RunningServer {
    pub fn status(&self) -> ServerStatus {
        self.status.lock().expect("status lock").clone()
    }

    pub fn is_finished(&self) -> bool {
        self.thread.is_finished()
    }

    /// Polls until `pred` holds or `timeout` passes.
    pub fn wait_for(&self, timeout: Duration, pred: impl Fn(&ServerStatus) -> bool) -> bool {
        let start = Instant::now();
        while start.elapsed() < timeout {
            if pred(&self.status()) {
                return true;
            }
            thread::sleep(Duration::from_millis(5));
        }
        pred(&self.status())
    }

    pub fn stop(self) -> Result<ServeReport, LiveError> {
        self.shutdown.store(true, Ordering::Relaxed);
        self.join()
    }

    pub fn join(self) -> Result<ServeReport, LiveError> {
        self.thread.join().expect("server thread panicked")
    }
}

fn accept_loop(
    listener: TcpListener,
    tx: Sender<Event>,
    shutdown: Arc<AtomicBool>,
    first_id: ConnId,
    handler: fn(TcpStream, ConnId, Sender<Event>, Arc<AtomicBool>),
) -> io::Result<JoinHandle<()>> {
    listener.set_nonblocking(true)?;
    Ok(thread::spawn(move || {
        let mut next = first_id;
        let mut workers = Vec::new();
        while !shutdown.load(Ordering::Relaxed) {
            match listener.accept() {
                Ok((stream, _)) => {
                    if stream.set_nonblocking(false).is_err() {
                        continue;
                    }
                    let _ = stream.set_nodelay(true);
                    let (tx, stop) = (tx.clone(), Arc::clone(&shutdown));
                    let conn = next;
                    next += 1;
                    workers.push(thread::spawn(move || handler(stream, conn, tx, stop)));
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL),
                Err(e) => {
                    log::error!("accept failed: {e}");
                    thread::sleep(POLL);
                }
            }
        }
        for w in workers {
            let _ = w.join();
        }
    }))
}

fn tcp_connection(stream: TcpStream, conn: ConnId, tx: Sender<Event>, shutdown: Arc<AtomicBool>) {
    let Ok(peer) = stream.peer_addr() else { return };
    let Ok(writer) = stream.try_clone() else { return };
    if tx.send(Event::Connected { conn, peer, sink: Sink::Tcp(writer) }).is_err() {
        return;
    }
    let mut reader = io::BufReader::new(stream);
    // Blocking reads end when the owner shuts the socket down.
    while !shutdown.load(Ordering::Relaxed) {
        match read_frame(&mut reader) {
            Ok(Some(frame)) => {
                if tx.send(Event::Frame { conn, frame }).is_err() {
                    break;
                }
            }
            Ok(None) => break,
            Err(e) => {
                log::warn!("dropping connection {peer}: {e}");
                break;
            }
        }
    }
    let _ = tx.send(Event::Disconnected { conn });
}

fn udp_loop(socket: UdpSocket, tx: Sender<Event>, shutdown: Arc<AtomicBool>) -> io::Result<JoinHandle<()>> {
    socket.set_read_timeout(Some(POLL))?;
    Ok(thread::spawn(move || {
        let mut buf = vec![0u8; 65_536];
        while !shutdown.load(Ordering::Relaxed) {
            match socket.recv_from(&mut buf) {
                Ok((n, from)) => match decode(&buf[..n]) {
                    Ok(frame) => {
                        if tx.send(Event::Datagram { from, frame }).is_err() {
                            break;
                        }
                    }
                    Err(e) => log::debug!("dropping datagram from {from}: {e}"),
                },
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
                Err(e) => log::warn!("udp receive failed: {e}"),
            }
        }
    }))
}

struct Conn {
    sink: Sink,
    peer: SocketAddr,
    slot: Option<u8>,
}

/// The single owner of all session state.
struct Owner {
    host: SessionHost,
    udp: UdpSocket,
    status: Arc<Mutex<ServerStatus>>,
    conns: BTreeMap<ConnId, Conn>,
    slots: [Option<ConnId>; 2],
    datagram_addr: [Option<SocketAddr>; 2],
    refused: usize,
    start: Instant,
}

impl Owner {
    fn new(cfg: HostConfig, udp: UdpSocket, status: Arc<Mutex<ServerStatus>>) -> Self {
        Self {
            host: SessionHost::new(cfg),
            udp,
            status,
            conns: BTreeMap::new(),
            slots: [None; 2],
            datagram_addr: [None; 2],
            refused: 0,
            start: Instant::now(),
        }
    }

    fn now_us(&self) -> u64 {
        self.start.elapsed().as_micros() as u64
    }

    fn run(&mut self, rx: &Receiver<Event>, shutdown: &AtomicBool) -> Result<(), LiveError> {
        let mut done_at: Option<Instant> = None;
        loop {
            if shutdown.load(Ordering::Relaxed) {
                log::info!("shutting down");
                break;
            }
            if done_at.is_some_and(|t| t.elapsed() > LINGER) {
                break;
            }
            match rx.recv_timeout(POLL) {
                Ok(ev) => self.apply(ev)?,
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => break,
            }
            if done_at.is_none() && self.host.is_done() {
                log::info!("session complete");
                done_at = Some(Instant::now());
            }
            self.publish();
        }
        for c in self.conns.values() {
            if let Sink::Tcp(s) = &c.sink {
                let _ = s.shutdown(std::net::Shutdown::Both);
            }
        }
        Ok(())
    }

    fn publish(&self) {
        let mut s = self.status.lock().expect("status lock");
        s.phase = self.host.state().phase;
        s.participants = self.slots.iter().flatten().count();
        s.refused = self.refused;
    }

    fn apply(&mut self, ev: Event) -> Result<(), LiveError> {
        match ev {
            Event::Connected { conn, peer, sink } => {
                log::info!("connection {conn} from {peer}");
                self.conns.insert(conn, Conn { sink, peer, slot: None });
            }
            Event::Disconnected { conn } => {
                if let Some(c) = self.conns.remove(&conn)
                    && let Some(p) = c.slot {
                        log::warn!("participant {p} disconnected");
                        self.slots[p as usize] = None;
                        self.datagram_addr[p as usize] = None;
                    }
            }
            Event::Frame { conn, frame } => self.on_frame(conn, frame)?,
            Event::Datagram { from, frame } => {
                match self.datagram_addr.iter().position(|a| *a == Some(from)) {
                    Some(p) => self.dispatch(p as u8, frame)?,
                    None => log::debug!("datagram from unknown sender {from}"),
                }
            }
        }
        Ok(())
    }

    fn on_frame(&mut self, conn: ConnId, frame: Frame) -> Result<(), LiveError> {
        let Some(c) = self.conns.get_mut(&conn) else { return Ok(()) };
        if let Some(p) = c.slot {
            return self.dispatch(p, frame);
        }
        let Message::Join(join) = &frame.message else {
            let reject = Reject { code: RejectCode::Forbidden, text: "send JOIN first".into() };
            let _ = c.sink.send(&Frame::new(0, Message::Reject(reject)));
            return Ok(());
        };
        let Some(p) = (0..2u8).find(|&p| self.slots[p as usize].is_none()) else {
            log::warn!("refusing {}: session full", c.peer);
            self.refused += 1;
            let _ = c.sink.send(&Frame::new(0, SessionHost::session_full()));
            if let Sink::Tcp(s) = &c.sink {
                let _ = s.shutdown(std::net::Shutdown::Both);
            }
            return Ok(());
        };
        self.slots[p as usize] = Some(conn);
        if matches!(c.sink, Sink::Tcp(_)) && join.udp_port != 0 {
            self.datagram_addr[p as usize] = Some(SocketAddr::new(c.peer.ip(), join.udp_port));
        }
        c.slot = Some(p);
        log::info!("participant {p} joined as {:?}", join.name);
        let outs = if self.host.state().joined[p as usize] {
            self.host.rejoin(p)
        } else {
            self.host.handle(self.now_us(), p, frame)?
        };
        self.route(outs);
        Ok(())
    }

    fn dispatch(&mut self, p: u8, frame: Frame) -> Result<(), LiveError> {
        let outs = self.host.handle(self.now_us(), p, frame)?;
        self.route(outs);
        Ok(())
    }

    fn route(&mut self, outs: Vec<super::host::Outgoing>) {
        for out in outs {
            let Some(conn) = self.slots[out.to as usize] else { continue };
            let Some(c) = self.conns.get_mut(&conn) else { continue };
            let datagram = out.frame.message.channel() == Channel::Unreliable;
            let sent = match (datagram, self.datagram_addr[out.to as usize], &mut c.sink) {
                (true, Some(addr), Sink::Tcp(_)) => {
                    encode(&out.frame).map_err(io::Error::other).and_then(|b| self.udp.send_to(&b, addr).map(|_| ()))
                }
                (_, _, sink) => sink.send(&out.frame),
            };
            if let Err(e) = sent {
                log::warn!("send to participant {} failed: {e}", out.to);
            }
        }
    }
}

/// Settings of a headless agent client.
#[derive(Debug, Clone)]
pub struct ClientOptions {
    pub server_tcp: String,
    pub server_udp: String,
    pub name: String,
    pub volume: WorkspaceVolume,
    pub board: BoardSpec,
    pub rules: RuleSet,
    pub click_mode: ClickMode,
    pub retransmit_us: u64,
    pub pose_period_us: u64,
    pub timing: AgentTiming,
    pub policies: Vec<AgentPolicy>,
    pub seed: u64,
    /// Stop after this many study tasks; `None` runs to the end of the session.
    pub stop_after_tasks: Option<usize>,
    pub max_duration: Duration,
}

impl ClientOptions {
    pub fn from_config(cfg: &Config, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let volume = cfg.volume()?;
        Ok(Self {
            server_tcp: cfg.server.tcp.clone(),
            server_udp: cfg.server.udp.clone(),
            name: format!("agent-{seed}"),
            board: cfg.board_spec(&volume),
            volume,
            rules: cfg.rules,
            click_mode: cfg.session.click_mode,
            retransmit_us: cfg.session.retransmit_ms * 1000,
            pose_period_us: cfg.pose_period_us(),
            timing: cfg.timing,
            policies: cfg.policies(),
            seed,
            stop_after_tasks: None,
            max_duration: Duration::from_secs(3600),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ClientReport {
    pub role: Option<Role>,
    /// Completed task numbers in order, training (0) included.
    pub completed: Vec<u8>,
    pub rejects: Vec<Reject>,
    pub board: BoardState,
}

fn resolve(addr: &str) -> Result<SocketAddr, LiveError> {
    addr.to_socket_addrs()?
        .next()
        .ok_or_else(|| LiveError::Io(io::Error::new(io::ErrorKind::NotFound, format!("cannot resolve {addr}"))))
}

enum Inbound {
    Frame(Frame),
    Closed,
}

/// Connects one scripted agent to a live server and plays until the session
/// ends, `stop_after_tasks` study tasks are done, or `max_duration` passes.
pub fn run_client(opts: &ClientOptions) -> Result<ClientReport, LiveError> {
    let server_udp = resolve(&opts.server_udp)?;
    let tcp = TcpStream::connect(&opts.server_tcp)?;
    tcp.set_nodelay(true)?;
    let local: IpAddr = if server_udp.is_ipv4() { Ipv4Addr::UNSPECIFIED.into() } else { Ipv6Addr::UNSPECIFIED.into() };
    let udp = UdpSocket::bind(SocketAddr::new(local, 0))?;
    udp.set_read_timeout(Some(POLL))?;

    let (tx, rx) = mpsc::channel();
    let stop = Arc::new(AtomicBool::new(false));
    let mut reader = io::BufReader::new(tcp.try_clone()?);
    let tcp_tx = tx.clone();
    let tcp_thread = thread::spawn(move || {
        loop {
            match read_frame(&mut reader) {
                Ok(Some(f)) => {
                    if tcp_tx.send(Inbound::Frame(f)).is_err() {
                        break;
                    }
                }
                _ => {
                    let _ = tcp_tx.send(Inbound::Closed);
                    break;
                }
            }
        }
    });
    let udp_in = udp.try_clone()?;
    let udp_stop = Arc::clone(&stop);
    let udp_thread = thread::spawn(move || {
        let mut buf = vec![0u8; 65_536];
        while !udp_stop.load(Ordering::Relaxed) {
            if let Ok((n, _)) = udp_in.recv_from(&mut buf)
                && let Ok(f) = decode(&buf[..n])
                    && tx.send(Inbound::Frame(f)).is_err() {
                        break;
                    }
        }
    });

    let result = client_loop(opts, tcp.try_clone()?, &udp, server_udp, &rx);
    stop.store(true, Ordering::Relaxed);
    let _ = tcp.shutdown(std::net::Shutdown::Both);
    let _ = tcp_thread.join();
    let _ = udp_thread.join();
    result
}

fn client_loop(
    opts: &ClientOptions,
    mut tcp: TcpStream,
    udp: &UdpSocket,
    server_udp: SocketAddr,
    rx: &Receiver<Inbound>,
) -> Result<ClientReport, LiveError> {
    let mut core = ClientCore::new(opts.board, opts.click_mode, opts.retransmit_us);
    let mut agent = Agent::new(
        opts.policies.clone(),
        opts.volume.clone(),
        opts.board,
        opts.rules,
        opts.timing,
        opts.click_mode,
        opts.seed,
    );
    let mut send = |f: &Frame| -> Result<(), LiveError> {
        let bytes = encode(f)?;
        match f.message.channel() {
            Channel::Reliable => tcp.write_all(&bytes)?,
            Channel::Unreliable => {
                udp.send_to(&bytes, server_udp)?;
            }
        }
        Ok(())
    };
    let join = core.join(&opts.name, udp.local_addr()?.port());
    send(&join)?;

    let start = Instant::now();
    let period = Duration::from_micros(opts.pose_period_us);
    let mut next_tick = start;
    let report = |core: &ClientCore| ClientReport {
        role: core.role(),
        completed: core.completed().to_vec(),
        rejects: core.rejects().to_vec(),
        board: core.replica().board().clone(),
    };
    loop {
        let wait = next_tick.saturating_duration_since(Instant::now());
        match rx.recv_timeout(wait) {
            Ok(Inbound::Frame(f)) => {
                for reply in core.on_frame(f) {
                    send(&reply)?;
                }
                if let Some(r) = core.rejects().iter().find(|r| r.code == RejectCode::SessionFull) {
                    return Err(LiveError::Rejected(r.text.clone()));
                }
                continue;
            }
            Ok(Inbound::Closed) | Err(RecvTimeoutError::Disconnected) => {
                return if core.completed().iter().any(|&t| t as usize == crate::protocol::TASK_COUNT as usize) {
                    Ok(report(&core))
                } else {
                    Err(LiveError::Disconnected)
                };
            }
            Err(RecvTimeoutError::Timeout) => {}
        }
        let study_done = core.completed().iter().filter(|&&t| t > 0).count();
        if core.completed().contains(&crate::protocol::TASK_COUNT)
            || opts.stop_after_tasks.is_some_and(|n| study_done >= n)
        {
            return Ok(report(&core));
        }
        if start.elapsed() > opts.max_duration {
            return Err(LiveError::TimedOut(opts.max_duration));
        }
        next_tick += period;
        let now = start.elapsed().as_micros() as u64;
        let out = agent.tick(now, &core);
        if let Some(e) = out.embodiment {
            let f = core.embodiment(e);
            send(&f)?;
        }
        if let Some(p) = out.pose {
            let f = core.pose(now, &p);
            send(&f)?;
        }
        if let Some(b) = out.click {
            core.click(now, b);
        }
        for f in core.poll(now) {
            send(&f)?;
        }
    }
}
