use crate::Role;
use crate::board::BoardSpec;
use crate::geometry::{ConditionSpec, Pose};
use crate::protocol::{
    ButtonEvent, ClickMode, ClickSender, EmbodimentFrame, Empty, Frame, Join, Message, PoseSample, PoseStream, Reject, Replica,
    ReplicaError, role_from_code,
};

/// Task announced by the last TASK_START.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveTask {
    pub task: u8,
    pub condition: ConditionSpec,
    pub puzzle: u32,
}

/// Participant side of a session: keeps the board replica, the remote
/// participant's latest pose and embodiment, and stamps outgoing frames
/// with per-channel sequence numbers. Performs no I/O.
pub struct ClientCore {
    participant: Option<u8>,
    role: Option<Role>,
    task: Option<ActiveTask>,
    replica: Replica,
    remote_pose: PoseStream,
    remote_body: Option<EmbodimentFrame>,
    clicks: ClickSender,
    reliable_seq: u32,
    datagram_seq: u32,
    completed: Vec<u8>,
    rejects: Vec<Reject>,
    task_starts: u64,
}

impl ClientCore {
    pub fn new(board: BoardSpec, click_mode: ClickMode, retransmit_us: u64) -> Self {
        Self {
            participant: None,
            role: None,
            task: None,
            replica: Replica::new(board),
            remote_pose: PoseStream::new(),
            remote_body: None,
            clicks: ClickSender::new(click_mode, retransmit_us),
            reliable_seq: 0,
            datagram_seq: 0,
            completed: Vec::new(),
            rejects: Vec::new(),
            task_starts: 0,
        }
    }

    pub fn participant(&self) -> Option<u8> {
        self.participant
    }

    pub fn role(&self) -> Option<Role> {
        self.role
    }

    pub fn task(&self) -> Option<ActiveTask> {
        self.task
    }

    /// Increments on every TASK_START, so callers can notice a new task.
    pub fn task_generation(&self) -> u64 {
        self.task_starts
    }

    pub fn replica(&self) -> &Replica {
        &self.replica
    }

    pub fn remote_pose(&self) -> Option<PoseSample> {
        self.remote_pose.latest()
    }

    pub fn remote_body(&self) -> Option<&EmbodimentFrame> {
        self.remote_body.as_ref()
    }

    pub fn completed(&self) -> &[u8] {
        &self.completed
    }

    pub fn rejects(&self) -> &[Reject] {
        &self.rejects
    }

    pub fn clicks_idle(&self) -> bool {
        self.clicks.is_idle()
    }

    fn stamp(&mut self, message: Message) -> Frame {
        let counter = match message.channel() {
            crate::protocol::Channel::Reliable => &mut self.reliable_seq,
            crate::protocol::Channel::Unreliable => &mut self.datagram_seq,
        };
        let seq = *counter;
        *counter = counter.wrapping_add(1);
        Frame::new(seq, message)
    }

    pub fn join(&mut self, name: &str, udp_port: u16) -> Frame {
        self.stamp(Message::Join(Join { udp_port, name: name.into() }))
    }

    pub fn pose(&mut self, now_us: u64, pose: &Pose) -> Frame {
        self.stamp(Message::PoseSample(PoseSample::from_pose(now_us, pose)))
    }

    pub fn embodiment(&mut self, frame: EmbodimentFrame) -> Frame {
        self.stamp(Message::EmbodimentFrame(frame))
    }

    pub fn click(&mut self, now_us: u64, button: u8) {
        self.clicks.click(ButtonEvent { timestamp_us: now_us, button });
    }

    /// Click datagrams due at `now` (first sends and retransmissions).
    pub fn poll(&mut self, now_us: u64) -> Vec<Frame> {
        self.clicks.poll(now_us).into_iter().map(|ev| self.stamp(Message::ButtonEvent(ev))).collect()
    }

    /// Handles one frame from the server; returns frames to send back.
    pub fn on_frame(&mut self, frame: Frame) -> Vec<Frame> {
        match &frame.message {
            Message::PoseSample(p) => {
                self.remote_pose.ingest_pose(frame.seq, *p);
                return Vec::new();
            }
            Message::ButtonEvent(_) => return Vec::new(),
            _ => {}
        }
        match self.replica.receive(&frame) {
            Ok(true) => {}
            Ok(false) => return Vec::new(),
            Err(ReplicaError::SeqGap { .. }) => {
                log::warn!("reliable sequence gap, requesting snapshot");
                return vec![self.stamp(Message::SnapshotRequest(Empty {}))];
            }
            Err(e) => {
                log::error!("replica rejected frame {}: {e}", frame.seq);
                return vec![self.stamp(Message::SnapshotRequest(Empty {}))];
            }
        }
        match frame.message {
            Message::RoleAssign(r) => {
                self.participant = Some(r.participant);
                self.role = role_from_code(r.role);
            }
            Message::TaskStart(t) => {
                self.task = ConditionSpec::from_code(t.condition).map(|condition| ActiveTask {
                    task: t.task,
                    condition,
                    puzzle: t.puzzle,
                });
                self.task_starts += 1;
            }
            Message::TaskComplete(t) => {
                self.completed.push(t.task);
                self.task = None;
            }
            Message::EmbodimentFrame(e) => self.remote_body = Some(e),
            Message::ButtonAck(a) => self.clicks.on_ack(a.timestamp_us),
            Message::Reject(r) => {
                log::info!("server rejected: {:?} {}", r.code, r.text);
                self.rejects.push(r);
            }
            _ => {}
        }
        Vec::new()
    }
}
