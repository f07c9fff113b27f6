//! Two-channel session replication.
//!
//! Workspace state, embodiment frames and session control ride a reliable
//! ordered stream; pose samples and button clicks ride unreliable datagrams.
//! Both channels share one binary frame layout:
//!
//! ```text
//! "NSP1" | version u8 | type u8 | seq u32 LE | payload length u32 LE | payload
//! ```

mod clicks;
mod message;
mod pose;
mod replica;
mod session;
mod text;

pub use clicks::{ClickMode, ClickReceiver, ClickSender};
pub use message::{
    ButtonAck, ButtonEvent, Channel, CubeRecord, Delta, DeltaOp, EmbodimentFrame, Empty, Frame, HEADER_LEN, Header, Highlight,
    JOINT_COUNT, Join, MAGIC, MAX_PAYLOAD, MAX_POINTS_PER_FRAME, Message, MessageType, PointSample, PoseSample, ProtocolError,
    Reject, RejectCode, RoleAssign, Snapshot, TaskComplete, TaskStart, VERSION, decode, decode_header, decode_prefix, encode,
};
pub use pose::PoseStream;
pub use replica::{Replica, ReplicaError, apply_delta, board_from_snapshot, snapshot_of};
pub use session::{
    IllegalTransition, LATIN_SQUARE, Phase, SessionInput, SessionState, TASK_COUNT, TASKS_PER_BLOCK, TaskPlan, session_step,
};
pub use text::{TextError, binary_to_text, from_text, text_to_binary, to_text};

use crate::Role;

pub fn role_code(role: Role) -> u8 {
    match role {
        Role::Instructor => 1,
        Role::Assembler => 2,
    }
}

pub fn role_from_code(code: u8) -> Option<Role> {
    match code {
        1 => Some(Role::Instructor),
        2 => Some(Role::Assembler),
        _ => None,
    }
}
