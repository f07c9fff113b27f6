use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::config::ConfigError;

use crate::Role;
use crate::board::{BoardError, BoardSpec, BoardState, Cell};
use crate::geometry::{ConditionName, Entity, RigidMap, WorkspaceVolume, glue_transform, ray_direction};
use crate::protocol::{
    ButtonAck, ButtonEvent, ClickMode, ClickReceiver, Delta, Frame, Highlight, Message, Phase, PoseStream, Reject,
    RejectCode, RoleAssign, SessionInput, SessionState, TaskComplete, TaskPlan, TaskStart, role_code, session_step, snapshot_of,
};
use crate::tasks::{EventKind, EventLog, LogError, PuzzleError, PuzzleSpec, RuleSet, TaskAction, TaskTracker, generate_puzzle, Judgement, TRAINING_SEED};

/// Button value of an ordinary click.
pub const BUTTON_PRIMARY: u8 = 1;
/// Set on a click the participant repeats because the first one showed no effect.
pub const BUTTON_RETRY: u8 = 0x80;

#[derive(Debug, Clone)]
pub struct HostConfig {
    pub pair_id: u32,
    pub click_mode: ClickMode,
    pub volume: WorkspaceVolume,
    pub board: BoardSpec,
    pub rules: RuleSet,
    pub training: TaskPlan,
    /// Wall-clock time of session time zero.
    pub epoch: DateTime<Utc>,
    /// Overrides the condition order and puzzles derived from `pair_id`.
    pub schedule: Option<Schedule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// Condition order of the first and second block.
    pub condition_order: [[ConditionName; 4]; 2],
    pub puzzles: [u32; 8],
}

impl Schedule {
    pub fn of(state: &SessionState) -> Self {
        Self { condition_order: state.condition_order, puzzles: state.puzzles }
    }

    /// Each block uses every condition once and no puzzle repeats or
    /// reuses the training seed.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for block in &self.condition_order {
            let mut seen = block.to_vec();
            seen.sort();
            seen.dedup();
            if seen.len() != 4 {
                return Err(ConfigError::Invalid(format!("block {block:?} does not use each condition once")));
            }
        }
        let mut p = self.puzzles.to_vec();
        p.sort();
        p.dedup();
        if p.len() != 8 || p.contains(&(TRAINING_SEED as u32)) {
            return Err(ConfigError::Invalid(format!("puzzles {:?} must be 8 distinct non-training seeds", self.puzzles)));
        }
        Ok(())
    }
}

impl HostConfig {
    pub fn standard(pair_id: u32) -> Self {
        let volume = WorkspaceVolume::standard();
        Self {
            pair_id,
            click_mode: ClickMode::Faithful,
            board: BoardSpec::standard(&volume),
            volume,
            rules: RuleSet::default(),
            training: SessionState::new(pair_id).training,
            epoch: DateTime::UNIX_EPOCH,
            schedule: None,
        }
    }
}

/// A frame addressed to participant `to`; the channel follows from the message type.
#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub to: u8,
    pub frame: Frame,
}

struct ActiveTask {
    plan: TaskPlan,
    workspace: RigidMap,
    puzzle: PuzzleSpec,
    tracker: TaskTracker,
    log: EventLog,
}

/// Authoritative session owner. Takes decoded frames from both participants
/// one at a time and returns the frames to send back; performs no I/O.
pub struct SessionHost {
    cfg: HostConfig,
    state: SessionState,
    board: BoardState,
    task: Option<ActiveTask>,
    logs: Vec<EventLog>,
    poses: [PoseStream; 2],
    clicks: [ClickReceiver; 2],
    reliable_seq: [u32; 2],
    datagram_seq: [u32; 2],
    out: Vec<Outgoing>,
}

impl SessionHost {
    pub fn new(cfg: HostConfig) -> Self {
        let mut state = SessionState::with_training(cfg.pair_id, cfg.training);
        if let Some(s) = cfg.schedule {
            state.condition_order = s.condition_order;
            state.puzzles = s.puzzles;
        }
        let board = BoardState::new(cfg.board, Vec::new()).expect("empty board");
        let clicks = [ClickReceiver::new(cfg.click_mode), ClickReceiver::new(cfg.click_mode)];
        Self {
            cfg,
            state,
            board,
            task: None,
            logs: Vec::new(),
            poses: Default::default(),
            clicks,
            reliable_seq: [0; 2],
            datagram_seq: [0; 2],
            out: Vec::new(),
        }
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn board(&self) -> &BoardState {
        &self.board
    }

    pub fn is_done(&self) -> bool {
        self.state.phase == Phase::Done
    }

    /// Logs of every finished task, training first, in order.
    pub fn logs(&self) -> &[EventLog] {
        &self.logs
    }

    pub fn current_puzzle(&self) -> Option<&PuzzleSpec> {
        self.task.as_ref().map(|t| &t.puzzle)
    }

    fn send(&mut self, to: u8, message: Message) {
        let counter = match message.channel() {
            crate::protocol::Channel::Reliable => &mut self.reliable_seq[to as usize],
            crate::protocol::Channel::Unreliable => &mut self.datagram_seq[to as usize],
        };
        let seq = *counter;
        *counter = counter.wrapping_add(1);
        self.out.push(Outgoing { to, frame: Frame::new(seq, message) });
    }

    fn broadcast(&mut self, message: Message) {
        self.send(0, message.clone());
        self.send(1, message);
    }

    fn reject(&mut self, to: u8, code: RejectCode, text: impl Into<String>) {
        self.send(to, Message::Reject(Reject { code, text: text.into() }));
    }

    fn snapshot_for(&self, to: u8) -> Message {
        let redact = self.state.roles[to as usize] == Role::Assembler;
        Message::StateSnapshot(snapshot_of(&self.board, redact))
    }

    fn log(&mut self, now_us: u64, kind: EventKind) {
        if let Some(t) = &mut self.task {
            t.log.push(now_us as f64 / 1e6, kind);
        }
    }

    /// Refuses a connection beyond the two participants.
    pub fn session_full() -> Message {
        Message::Reject(Reject { code: RejectCode::SessionFull, text: "session already has two participants".into() })
    }

    pub fn handle(&mut self, now_us: u64, from: u8, frame: Frame) -> Result<Vec<Outgoing>, PuzzleError> {
        debug_assert!(from < 2);
        match frame.message {
            Message::Join(_) => self.on_join(now_us, from)?,
            Message::SnapshotRequest(_) => {
                let m = self.snapshot_for(from);
                self.send(from, m);
            }
            Message::PoseSample(sample) => {
                if self.poses[from as usize].ingest_pose(frame.seq, sample) {
                    self.send(1 - from, Message::PoseSample(sample));
                    if self.is_assembler(from) {
                        self.hover(now_us, from);
                    }
                }
            }
            Message::ButtonEvent(ev) => self.on_click(now_us, from, frame.seq, ev)?,
            Message::EmbodimentFrame(e) => self.send(1 - from, Message::EmbodimentFrame(e)),
            other => self.reject(from, RejectCode::Forbidden, format!("{:?} is server-only", other.kind())),
        }
        Ok(std::mem::take(&mut self.out))
    }

    /// Re-attaches participant `p` on a fresh connection: restarts its
    /// sequence numbers and resends role, current task and a snapshot.
    pub fn rejoin(&mut self, p: u8) -> Vec<Outgoing> {
        debug_assert!(p < 2);
        let i = p as usize;
        self.reliable_seq[i] = 0;
        self.datagram_seq[i] = 0;
        self.poses[i] = PoseStream::new();
        self.clicks[i] = ClickReceiver::new(self.cfg.click_mode);
        let role = role_code(self.state.roles[i]);
        self.send(p, Message::RoleAssign(RoleAssign { participant: p, role }));
        if let Some(t) = &self.task {
            let start = TaskStart { task: t.plan.task, condition: t.plan.condition.spec().code(), puzzle: t.plan.puzzle };
            self.send(p, Message::TaskStart(start));
            let snap = self.snapshot_for(p);
            self.send(p, snap);
        }
        std::mem::take(&mut self.out)
    }

    fn is_assembler(&self, p: u8) -> bool {
        self.state.roles[p as usize] == Role::Assembler && self.task.is_some()
    }

    fn on_join(&mut self, now_us: u64, from: u8) -> Result<(), PuzzleError> {
        match session_step(&self.state, SessionInput::Join(from)) {
            Ok(next) => {
                self.state = next;
                let role = role_code(self.state.roles[from as usize]);
                self.send(from, Message::RoleAssign(RoleAssign { participant: from, role }));
                if self.state.phase == Phase::Training {
                    self.start_task(now_us)?;
                }
            }
            Err(e) => self.reject(from, RejectCode::IllegalTransition, e.to_string()),
        }
        Ok(())
    }

    fn start_task(&mut self, now_us: u64) -> Result<(), PuzzleError> {
        let plan = self.state.plan().expect("phase has a task");
        let puzzle = generate_puzzle(plan.puzzle as u64, &self.cfg.board, &self.cfg.rules)?;
        self.board = puzzle.initial_board(self.cfg.board).map_err(|e| PuzzleError::BoardTooSmall(e.to_string()))?;
        let condition = plan.condition.spec();
        let mut log = EventLog::new(self.cfg.epoch);
        log.push(now_us as f64 / 1e6, EventKind::TaskStart { task: plan.task, condition: condition.to_string(), puzzle: plan.puzzle });
        self.task = Some(ActiveTask {
            plan,
            workspace: glue_transform(condition, Entity::Workspace),
            puzzle,
            tracker: TaskTracker::new(),
            log,
        });
        for p in 0..2 {
            self.send(p, Message::TaskStart(TaskStart { task: plan.task, condition: condition.code(), puzzle: plan.puzzle }));
            let snap = self.snapshot_for(p);
            self.send(p, snap);
        }
        Ok(())
    }

    /// The assembler's pointer ray in their own rendering of the workspace.
    fn pointer(&self, p: u8) -> Option<(crate::geometry::Point, crate::geometry::Vector)> {
        let pose = self.poses[p as usize].latest()?.to_pose().ok()?;
        Some((pose.hand, ray_direction(pose.orientation).ok()?))
    }

    fn hover(&mut self, now_us: u64, p: u8) {
        if self.board.held().is_some() {
            return;
        }
        let Some((origin, dir)) = self.pointer(p) else { return };
        let workspace = self.task.as_ref().expect("task active").workspace;
        let target = self.board.pointed_cube(&origin, &dir, &workspace);
        let current = self.board.selection();
        if target == current {
            return;
        }
        match (target, current) {
            (Some(cube), _) => {
                self.board.select(cube).expect("pointed cube exists and nothing is held");
                self.broadcast(Message::StateDelta(Delta::select(cube)));
                self.broadcast(Message::Highlight(Highlight { cube: cube.0 }));
                self.log(now_us, EventKind::Select { cube });
            }
            (None, Some(prev)) => {
                self.board.deselect().expect("selection present and nothing held");
                self.broadcast(Message::StateDelta(Delta::deselect(prev)));
                self.broadcast(Message::Highlight(Highlight { cube: 0 }));
            }
            (None, None) => {}
        }
    }

    fn on_click(&mut self, now_us: u64, from: u8, seq: u32, ev: ButtonEvent) -> Result<(), PuzzleError> {
        let receiver = &mut self.clicks[from as usize];
        let fresh = receiver.accept(&ev);
        if receiver.needs_ack() {
            self.send(from, Message::ButtonAck(ButtonAck { timestamp_us: ev.timestamp_us }));
        }
        if !fresh {
            return Ok(());
        }
        self.poses[from as usize].advance_floor(seq);
        if !self.is_assembler(from) {
            return Ok(());
        }
        if ev.button & BUTTON_RETRY != 0 {
            self.log(now_us, EventKind::ClickRetry);
        }
        if let Some(cube) = self.board.held() {
            let workspace = self.task.as_ref().expect("task active").workspace;
            let Some(cell) = self.pointer(from).and_then(|(o, d)| self.board.spec.pointed_cell(&o, &d, &workspace)) else {
                self.reject(from, RejectCode::Board, "pointer is not on the board");
                return Ok(());
            };
            self.drop_cube(now_us, from, cube, cell)
        } else if let Some(cube) = self.board.selection() {
            self.board.pick().expect("selection present and nothing held");
            let task = self.task.as_mut().expect("task active");
            let judgement = task.tracker.apply(&task.puzzle, TaskAction::Select(cube));
            self.broadcast(Message::StateDelta(Delta::pick(cube)));
            self.log(now_us, EventKind::Pick { cube });
            if judgement == Judgement::WrongSelect {
                self.log(now_us, EventKind::WrongSelect { cube });
            }
            Ok(())
        } else {
            self.reject(from, RejectCode::Board, BoardError::NothingSelected.to_string());
            Ok(())
        }
    }

    fn drop_cube(&mut self, now_us: u64, from: u8, cube: crate::board::CubeId, cell: Cell) -> Result<(), PuzzleError> {
        if let Err(e) = self.board.drop_at(cell) {
            self.reject(from, RejectCode::Board, e.to_string());
            return Ok(());
        }
        let task = self.task.as_mut().expect("task active");
        let judgement = task.tracker.apply(&task.puzzle, TaskAction::Drop(cube, cell));
        self.broadcast(Message::StateDelta(Delta::drop(cube, cell)));
        self.broadcast(Message::Highlight(Highlight { cube: 0 }));
        self.log(now_us, EventKind::Drop { cube, cell });
        match judgement {
            Judgement::WrongPlace => self.log(now_us, EventKind::WrongPlace { cube, cell }),
            Judgement::Complete => self.complete_task(now_us)?,
            _ => {}
        }
        Ok(())
    }

    fn complete_task(&mut self, now_us: u64) -> Result<(), PuzzleError> {
        self.log(now_us, EventKind::Fade);
        self.log(now_us, EventKind::TaskComplete);
        let task = self.task.take().expect("task active");
        self.logs.push(task.log);
        self.broadcast(Message::TaskComplete(TaskComplete { task: task.plan.task }));
        self.state = session_step(&self.state, SessionInput::TaskComplete).expect("task phases accept completion");
        if self.state.phase == Phase::RoleSwitch {
            for p in 0..2u8 {
                let role = role_code(self.state.roles[p as usize]);
                self.send(p, Message::RoleAssign(RoleAssign { participant: p, role }));
            }
            self.state = session_step(&self.state, SessionInput::Continue).expect("role switch accepts continue");
        }
        if self.state.plan().is_some() {
            self.start_task(now_us)?;
        }
        Ok(())
    }
}

/// Writes `logs` (training first) as JSON-lines files named
/// `pair<id>-training.jsonl` and `pair<id>-task<n>.jsonl`.
pub fn write_session_logs(dir: &Path, pair_id: u32, logs: &[EventLog]) -> Result<Vec<PathBuf>, LogError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(logs.len());
    for (i, log) in logs.iter().enumerate() {
        let name = if i == 0 { format!("pair{pair_id}-training.jsonl") } else { format!("pair{pair_id}-task{i}.jsonl") };
        let path = dir.join(name);
        log.write_jsonl(&path)?;
        paths.push(path);
    }
    Ok(paths)
}
