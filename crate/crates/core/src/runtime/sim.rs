//! Single-threaded, event-driven simulation on a virtual microsecond clock.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{Agent, AgentPolicy, AgentTiming};
use super::client::ClientCore;
use super::config::{Config, ConfigError};
use super::host::{HostConfig, SessionHost};
use crate::board::BoardState;
use crate::protocol::{
    ButtonAck, ButtonEvent, Channel, ClickMode, ClickReceiver, ClickSender, Frame, Message, Phase, ProtocolError, decode, encode,
};
use crate::tasks::{EventLog, PuzzleError};

/// Link behaviour shared by every connection of a simulated session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkModel {
    /// One-way latency, milliseconds.
    pub latency_ms: f64,
    /// Extra delay drawn uniformly from `[0, jitter_ms]`.
    pub jitter_ms: f64,
    /// Datagram loss probability; the reliable channel never loses.
    pub loss: f64,
    /// Probability that a datagram is delivered twice.
    pub duplicate: f64,
    pub seed: u64,
}

impl Default for NetworkModel {
    fn default() -> Self {
        Self { latency_ms: 20.0, jitter_ms: 5.0, loss: 0.0, duplicate: 0.0, seed: 0 }
    }
}

impl NetworkModel {
    pub fn lossless() -> Self {
        Self::default()
    }

    pub fn lossy(loss: f64, seed: u64) -> Self {
        Self { loss, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.latency_ms) || !ok(self.jitter_ms) {
            return Err(ConfigError::Invalid(format!(
                "latency {} ms and jitter {} ms must be finite and non-negative",
                self.latency_ms, self.jitter_ms
            )));
        }
        for (name, p) in [("loss", self.loss), ("duplicate", self.duplicate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::Invalid(format!("network.{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetStats {
    pub reliable: u64,
    pub datagrams: u64,
    pub lost: u64,
    pub duplicated: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Scheduled {
    at: u64,
    order: u64,
    from: usize,
    to: usize,
    bytes: Vec<u8>,
}

/// A delivered message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub at: u64,
    pub from: usize,
    pub to: usize,
    pub bytes: Vec<u8>,
}

/// Message scheduler between numbered nodes. Reliable sends keep FIFO order
/// per (from, to) pair; datagrams may be lost, duplicated or reordered.
pub struct SimNetwork {
    model: NetworkModel,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<Scheduled>>,
    order: u64,
    tails: BTreeMap<(usize, usize), u64>,
    stats: NetStats,
}

impl SimNetwork {
    pub fn new(model: NetworkModel) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            model,
            queue: BinaryHeap::new(),
            order: 0,
            tails: BTreeMap::new(),
            stats: NetStats::default(),
        }
    }

    fn delay(&mut self) -> u64 {
        let jitter = if self.model.jitter_ms > 0.0 { self.rng.random_range(0.0..=self.model.jitter_ms) } else { 0.0 };
        ((self.model.latency_ms + jitter) * 1000.0).round() as u64
    }

    fn push(&mut self, at: u64, from: usize, to: usize, bytes: Vec<u8>) {
        self.order += 1;
        self.queue.push(Reverse(Scheduled { at, order: self.order, from, to, bytes }));
    }

    pub fn send(&mut self, now: u64, from: usize, to: usize, channel: Channel, bytes: Vec<u8>) {
        match channel {
            Channel::Reliable => {
                self.stats.reliable += 1;
                let at = now + self.delay();
                let tail = self.tails.entry((from, to)).or_insert(0);
                let at = at.max(*tail);
                *tail = at;
                self.push(at, from, to, bytes);
            }
            Channel::Unreliable => {
                self.stats.datagrams += 1;
                if self.model.loss > 0.0 && self.rng.random::<f64>() < self.model.loss {
                    self.stats.lost += 1;
                    return;
                }
                if self.model.duplicate > 0.0 && self.rng.random::<f64>() < self.model.duplicate {
                    self.stats.duplicated += 1;
                    let at = now + self.delay();
                    self.push(at, from, to, bytes.clone());
                }
                let at = now + self.delay();
                self.push(at, from, to, bytes);
            }
        }
    }

    pub fn next_time(&self) -> Option<u64> {
        self.queue.peek().map(|Reverse(s)| s.at)
    }

    pub fn pop(&mut self) -> Option<Delivery> {
        self.queue.pop().map(|Reverse(s)| Delivery { at: s.at, from: s.from, to: s.to, bytes: s.bytes })
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn stats(&self) -> NetStats {
        self.stats
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("session stalled in phase {phase} at t = {at_us} us")]
    Stalled { phase: Phase, at_us: u64 },
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub host: HostConfig,
    pub policies: Vec<AgentPolicy>,
    pub network: NetworkModel,
    pub timing: AgentTiming,
    pub pose_period_us: u64,
    pub retransmit_us: u64,
    /// Seeds the agents; the network has its own seed.
    pub seed: u64,
    pub max_virtual_us: u64,
}

impl SimConfig {
    pub fn from_config(cfg: &Config, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Self {
            host: cfg.host_config()?,
            policies: cfg.policies(),
            network: NetworkModel { seed: cfg.network.seed ^ seed, ..cfg.network },
            timing: cfg.timing,
            pose_period_us: cfg.pose_period_us(),
            retransmit_us: cfg.session.retransmit_ms * 1000,
            seed,
            max_virtual_us: 4 * 3600 * 1_000_000,
        })
    }

    pub fn standard(pair_id: u32, network: NetworkModel, seed: u64) -> Self {
        let mut cfg = Config::default();
        cfg.session.pair_id = pair_id;
        let mut sim = Self::from_config(&cfg, seed).expect("defaults are valid");
        sim.network = network;
        sim
    }

    pub fn with_click_mode(mut self, mode: ClickMode) -> Self {
        self.host.click_mode = mode;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub training: EventLog,
    /// One log per study task, in task order.
    pub tasks: Vec<EventLog>,
    pub authority: BoardState,
    pub replicas: [BoardState; 2],
    pub stats: NetStats,
    pub virtual_us: u64,
}

impl SimOutcome {
    /// Both replicas show the authority's board, colors aside.
    pub fn converged(&self) -> bool {
        let a = self.authority.redacted();
        self.replicas.iter().all(|r| r.redacted() == a)
    }

    pub fn jsonl(&self) -> Vec<String> {
        self.tasks.iter().map(EventLog::to_jsonl).collect()
    }
}

const HOST: usize = 0;

/// Runs one full session (training plus eight tasks) between two scripted
/// agents over the simulated network. Deterministic in the configuration.
pub fn simulate_session(cfg: &SimConfig) -> Result<SimOutcome, SimError> {
    cfg.network.validate()?;
    for p in &cfg.policies {
        p.validate()?;
    }
    if let Some(s) = &cfg.host.schedule {
        s.validate()?;
    }
    let mut net = SimNetwork::new(cfg.network);
    let mut host = SessionHost::new(cfg.host.clone());
    let board = cfg.host.board;
    let mut clients: [ClientCore; 2] =
        std::array::from_fn(|_| ClientCore::new(board, cfg.host.click_mode, cfg.retransmit_us));
    let mut agents: [Agent; 2] = std::array::from_fn(|i| {
        Agent::new(
            cfg.policies.clone(),
            cfg.host.volume.clone(),
            board,
            cfg.host.rules,
            cfg.timing,
            cfg.host.click_mode,
            cfg.seed.wrapping_mul(2).wrapping_add(i as u64),
        )
    });

    for (i, c) in clients.iter_mut().enumerate() {
        let f = c.join(&format!("agent-{i}"), 0);
        net.send(i as u64 * 1000, i + 1, HOST, Channel::Reliable, encode(&f)?);
    }
    let mut next_tick = [0, cfg.pose_period_us / 2];
    let finished = |c: &ClientCore| c.completed().len() >= 9;

    loop {
        let active: Vec<usize> = (0..2).filter(|&i| !finished(&clients[i])).collect();
        let tick_at = active.iter().map(|&i| next_tick[i]).min();
        let net_at = net.next_time();
        let now = match (net_at, tick_at) {
            (None, None) => break,
            (Some(n), Some(t)) => n.min(t),
            (Some(n), None) => n,
            (None, Some(t)) => t,
        };
        if now > cfg.max_virtual_us {
            return Err(SimError::Stalled { phase: host.state().phase, at_us: now });
        }
        if net_at == Some(now) {
            let d = net.pop().expect("peeked");
            let frame = decode(&d.bytes)?;
            if d.to == HOST {
                for out in host.handle(now, (d.from - 1) as u8, frame)? {
                    let ch = out.frame.message.channel();
                    net.send(now, HOST, out.to as usize + 1, ch, encode(&out.frame)?);
                }
            } else {
                for reply in clients[d.to - 1].on_frame(frame) {
                    net.send(now, d.to, HOST, reply.message.channel(), encode(&reply)?);
                }
            }
            continue;
        }
        let i = *active.iter().min_by_key(|&&i| (next_tick[i], i)).expect("a client is due");
        next_tick[i] += cfg.pose_period_us;
        let out = agents[i].tick(now, &clients[i]);
        let mut frames: Vec<Frame> = Vec::new();
        if let Some(b) = out.embodiment {
            frames.push(clients[i].embodiment(b));
        }
        if let Some(p) = out.pose {
            frames.push(clients[i].pose(now, &p));
        }
        if let Some(button) = out.click {
            clients[i].click(now, button);
        }
        frames.extend(clients[i].poll(now));
        for f in frames {
            net.send(now, i + 1, HOST, f.message.channel(), encode(&f)?);
        }
    }

    if !host.is_done() {
        return Err(SimError::Stalled { phase: host.state().phase, at_us: cfg.max_virtual_us });
    }
    let mut logs = host.logs().to_vec();
    let training = logs.remove(0);
    Ok(SimOutcome {
        training,
        tasks: logs,
        authority: host.board().clone(),
        replicas: [clients[0].replica().board().clone(), clients[1].replica().board().clone()],
        stats: net.stats(),
        virtual_us: next_tick.into_iter().max().unwrap_or(0),
    })
}

/// Outcome of pushing a click stream through one lossy link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickDelivery {
    pub sent: Vec<u64>,
    /// Timestamps of clicks the receiver applied, in application order.
    pub delivered: Vec<u64>,
    pub transmissions: u64,
}

/// Sends `count` clicks, 10 ms apart, from node 1 to node 0 under `mode`.
/// Acknowledgements travel on the reliable channel.
pub fn click_delivery(mode: ClickMode, count: usize, network: NetworkModel, retransmit_us: u64) -> ClickDelivery {
    let mut net = SimNetwork::new(network);
    let mut sender = ClickSender::new(mode, retransmit_us);
    let mut receiver = ClickReceiver::new(mode);
    let sent: Vec<u64> = (0..count as u64).map(|i| (i + 1) * 10_000).collect();
    let mut next_click = 0;
    let mut delivered = Vec::new();
    let mut seq = 0u32;
    let mut now = 0u64;
    let tick = 1_000;
    loop {
        while next_click < sent.len() && sent[next_click] <= now {
            sender.click(ButtonEvent { timestamp_us: sent[next_click], button: 1 });
            next_click += 1;
        }
        for ev in sender.poll(now) {
            let bytes = encode(&Frame::new(seq, Message::ButtonEvent(ev))).expect("click encodes");
            seq += 1;
            net.send(now, 1, 0, Channel::Unreliable, bytes);
        }
        while net.next_time().is_some_and(|t| t <= now) {
            let d = net.pop().expect("peeked");
            match decode(&d.bytes).expect("well-formed").message {
                Message::ButtonEvent(ev) => {
                    if receiver.accept(&ev) {
                        delivered.push(ev.timestamp_us);
                    }
                    if receiver.needs_ack() {
                        let ack = Frame::new(0, Message::ButtonAck(ButtonAck { timestamp_us: ev.timestamp_us }));
                        net.send(now, 0, 1, Channel::Reliable, encode(&ack).expect("ack encodes"));
                    }
                }
                Message::ButtonAck(a) => sender.on_ack(a.timestamp_us),
                _ => {}
            }
        }
        if next_click == sent.len() && sender.is_idle() && net.is_idle() {
            break;
        }
        now += tick;
    }
    ClickDelivery { sent, delivered, transmissions: sender.transmissions() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reliable_links_stay_fifo_under_jitter() {
        let mut net = SimNetwork::new(NetworkModel { jitter_ms: 50.0, ..NetworkModel::default() });
        for i in 0..200u8 {
            net.send(i as u64 * 100, 0, 1, Channel::Reliable, vec![i]);
        }
        let order: Vec<u8> = std::iter::from_fn(|| net.pop()).map(|d| d.bytes[0]).collect();
        assert_eq!(order, (0..200).collect::<Vec<u8>>());
    }

    #[test]
    fn datagrams_reorder_and_drop() {
        let mut net = SimNetwork::new(NetworkModel { jitter_ms: 50.0, loss: 0.3, seed: 9, ..NetworkModel::default() });
        for i in 0..200u8 {
            net.send(i as u64 * 100, 0, 1, Channel::Unreliable, vec![i]);
        }
        let order: Vec<u8> = std::iter::from_fn(|| net.pop()).map(|d| d.bytes[0]).collect();
        assert!(order.len() < 200 && order.len() > 100);
        assert!(order.windows(2).any(|w| w[0] > w[1]));
        assert_eq!(net.stats().lost as usize, 200 - order.len());
    }

    #[test]
    fn faithful_clicks_on_a_dead_link() {
        let r = click_delivery(ClickMode::Faithful, 20, NetworkModel { loss: 1.0, ..NetworkModel::default() }, 50_000);
        assert!(r.delivered.is_empty());
        let r = click_delivery(ClickMode::Faithful, 20, NetworkModel::lossless(), 50_000);
        assert_eq!(r.delivered, r.sent);
    }

    #[test]
    fn lossless_session_completes() {
        let out = simulate_session(&SimConfig::standard(0, NetworkModel::lossless(), 1)).unwrap();
        assert_eq!(out.tasks.len(), 8);
        assert!(out.converged());
    }
}
