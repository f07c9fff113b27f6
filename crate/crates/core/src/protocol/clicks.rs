use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::message::ButtonEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClickMode {
    /// One datagram per click; lost clicks stay lost.
    #[default]
    Faithful,
    /// Retransmit until acknowledged, one click in flight at a time.
    ReliableClicks,
}

/// Sending half of click delivery. Retransmissions reuse the click's timestamp,
/// which is what the receiver deduplicates on.
#[derive(Debug, Clone)]
pub struct ClickSender {
    mode: ClickMode,
    retransmit_us: u64,
    queue: VecDeque<ButtonEvent>,
    in_flight: Option<(ButtonEvent, u64)>,
    transmissions: u64,
}

impl ClickSender {
    pub fn new(mode: ClickMode, retransmit_us: u64) -> Self {
        Self { mode, retransmit_us, queue: VecDeque::new(), in_flight: None, transmissions: 0 }
    }

    pub fn mode(&self) -> ClickMode {
        self.mode
    }

    pub fn click(&mut self, ev: ButtonEvent) {
        self.queue.push_back(ev);
    }

    pub fn on_ack(&mut self, timestamp_us: u64) {
        if self.in_flight.is_some_and(|(ev, _)| ev.timestamp_us == timestamp_us) {
            self.in_flight = None;
        }
    }

    /// Clicks to put on the wire at `now`.
    pub fn poll(&mut self, now_us: u64) -> Vec<ButtonEvent> {
        let mut out = Vec::new();
        match self.mode {
            ClickMode::Faithful => out.extend(self.queue.drain(..)),
            ClickMode::ReliableClicks => {
                if let Some((ev, sent)) = &mut self.in_flight {
                    if now_us >= *sent + self.retransmit_us {
                        *sent = now_us;
                        out.push(*ev);
                    }
                } else if let Some(ev) = self.queue.pop_front() {
                    self.in_flight = Some((ev, now_us));
                    out.push(ev);
                }
            }
        }
        self.transmissions += out.len() as u64;
        out
    }

    /// Next time `poll` may have something to send.
    pub fn next_deadline(&self) -> Option<u64> {
        match (self.in_flight, self.queue.is_empty()) {
            (Some((_, sent)), _) => Some(sent + self.retransmit_us),
            (None, false) => Some(0),
            (None, true) => None,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.in_flight.is_none() && self.queue.is_empty()
    }

    pub fn transmissions(&self) -> u64 {
        self.transmissions
    }
}

/// Receiving half: decides which arriving click datagrams count as clicks.
#[derive(Debug, Clone, Default)]
pub struct ClickReceiver {
    mode: ClickMode,
    last_ts: Option<u64>,
}

impl ClickReceiver {
    pub fn new(mode: ClickMode) -> Self {
        Self { mode, last_ts: None }
    }

    /// Returns whether the click should be applied. In reliable mode every
    /// arrival must also be acknowledged, duplicates included.
    pub fn accept(&mut self, ev: &ButtonEvent) -> bool {
        match self.mode {
            ClickMode::Faithful => true,
            ClickMode::ReliableClicks => {
                if self.last_ts.is_some_and(|t| ev.timestamp_us <= t) {
                    return false;
                }
                self.last_ts = Some(ev.timestamp_us);
                true
            }
        }
    }

    pub fn needs_ack(&self) -> bool {
        self.mode == ClickMode::ReliableClicks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(ts: u64) -> ButtonEvent {
        ButtonEvent { timestamp_us: ts, button: 0 }
    }

    #[test]
    fn faithful_sends_once() {
        let mut s = ClickSender::new(ClickMode::Faithful, 100);
        s.click(ev(1));
        s.click(ev(2));
        assert_eq!(s.poll(0).len(), 2);
        assert!(s.poll(1000).is_empty());
    }

    #[test]
    fn reliable_retransmits_until_acked() {
        let mut s = ClickSender::new(ClickMode::ReliableClicks, 100);
        s.click(ev(1));
        s.click(ev(2));
        assert_eq!(s.poll(0), [ev(1)]);
        assert!(s.poll(50).is_empty());
        assert_eq!(s.poll(100), [ev(1)]);
        s.on_ack(1);
        assert_eq!(s.poll(101), [ev(2)]);
        s.on_ack(2);
        assert!(s.is_idle());
    }

    #[test]
    fn receiver_dedupes_in_reliable_mode() {
        let mut r = ClickReceiver::new(ClickMode::ReliableClicks);
        assert!(r.accept(&ev(5)));
        assert!(!r.accept(&ev(5)));
        let mut f = ClickReceiver::new(ClickMode::Faithful);
        assert!(f.accept(&ev(5)) && f.accept(&ev(5)));
    }
}
