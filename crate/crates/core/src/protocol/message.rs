use serde::{Deserialize, Serialize};

pub const MAGIC: [u8; 4] = *b"NSP1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;
/// Upper bound on a declared payload length; larger headers are rejected before buffering.
pub const MAX_PAYLOAD: usize = 1 << 20;
/// Joints per embodiment frame: head, left hand, right hand, torso.
pub const JOINT_COUNT: usize = 4;
pub const MAX_POINTS_PER_FRAME: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("payload length does not match message type {0:?}")]
    LengthMismatch(MessageType),
    #[error("frame truncated: need {need} bytes, have {have}")]
    TruncatedPayload { need: usize, have: usize },
    #[error("invalid value for {0}")]
    BadValue(&'static str),
    #[error("{0} exceeds its wire limit")]
    Oversize(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Reliable,
    Unreliable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    Join = 1,
    RoleAssign = 2,
    TaskStart = 3,
    StateSnapshot = 4,
    StateDelta = 5,
    Highlight = 6,
    EmbodimentFrame = 7,
    TaskComplete = 8,
    PoseSample = 9,
    ButtonEvent = 10,
    SnapshotRequest = 11,
    ButtonAck = 12,
    Reject = 13,
}

impl MessageType {
    pub fn from_code(code: u8) -> Option<Self> {
        use MessageType::*;
        Some(match code {
            1 => Join,
            2 => RoleAssign,
            3 => TaskStart,
            4 => StateSnapshot,
            5 => StateDelta,
            6 => Highlight,
            7 => EmbodimentFrame,
            8 => TaskComplete,
            9 => PoseSample,
            10 => ButtonEvent,
            11 => SnapshotRequest,
            12 => ButtonAck,
            13 => Reject,
            _ => return None,
        })
    }

    pub fn channel(self) -> Channel {
        match self {
            MessageType::PoseSample | MessageType::ButtonEvent => Channel::Unreliable,
            _ => Channel::Reliable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Join {
    /// Port the client receives datagrams on.
    pub udp_port: u16,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleAssign {
    pub participant: u8,
    /// 1 instructor, 2 assembler.
    pub role: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskStart {
    /// 0 for training, 1..=8 for study tasks.
    pub task: u8,
    /// Condition triple code (bit2 identical pov, bit1 mirrored embodiment, bit0 mirrored workspace).
    pub condition: u8,
    pub puzzle: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeRecord {
    pub id: u8,
    /// Palette code, 0 when hidden from the receiver.
    pub color: u8,
    pub col: u8,
    pub row: u8,
    pub flags: u8,
}

impl CubeRecord {
    pub const HELD: u8 = 0b001;
    pub const SELECTED: u8 = 0b010;
    pub const HIGHLIGHTED: u8 = 0b100;
    /// Column/row value of a held cube.
    pub const OFF_BOARD: u8 = 0xFF;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub columns: u8,
    pub rows: u8,
    pub cubes: Vec<CubeRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum DeltaOp {
    Select = 1,
    Pick = 2,
    Drop = 3,
    Deselect = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delta {
    pub op: DeltaOp,
    pub cube: u8,
    pub col: u8,
    pub row: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Highlight {
    /// 0 clears the highlight.
    pub cube: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub position: [f32; 3],
    pub rgb: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbodimentFrame {
    pub frame_seq: u32,
    pub capture_us: u64,
    /// Head, left hand, right hand, torso.
    pub joints: [[f32; 3]; JOINT_COUNT],
    pub points: Vec<PointSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskComplete {
    pub task: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub timestamp_us: u64,
    pub head: [f32; 3],
    pub hand: [f32; 3],
    /// Quaternion x, y, z, w.
    pub orientation: [f32; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ButtonEvent {
    pub timestamp_us: u64,
    pub button: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ButtonAck {
    /// Timestamp of the acknowledged click.
    pub timestamp_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum RejectCode {
    SessionFull = 1,
    IllegalTransition = 2,
    Board = 3,
    Forbidden = 4,
    Malformed = 5,
}

impl RejectCode {
    fn from_code(c: u8) -> Option<Self> {
        use RejectCode::*;
        [SessionFull, IllegalTransition, Board, Forbidden, Malformed].into_iter().find(|r| *r as u8 == c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub code: RejectCode,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Empty {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Message {
    Join(Join),
    RoleAssign(RoleAssign),
    TaskStart(TaskStart),
    StateSnapshot(Snapshot),
    StateDelta(Delta),
    Highlight(Highlight),
    EmbodimentFrame(EmbodimentFrame),
    TaskComplete(TaskComplete),
    PoseSample(PoseSample),
    ButtonEvent(ButtonEvent),
    SnapshotRequest(Empty),
    ButtonAck(ButtonAck),
    Reject(Reject),
}

impl Message {
    pub fn kind(&self) -> MessageType {
        match self {
            Message::Join(_) => MessageType::Join,
            Message::RoleAssign(_) => MessageType::RoleAssign,
            Message::TaskStart(_) => MessageType::TaskStart,
            Message::StateSnapshot(_) => MessageType::StateSnapshot,
            Message::StateDelta(_) => MessageType::StateDelta,
            Message::Highlight(_) => MessageType::Highlight,
            Message::EmbodimentFrame(_) => MessageType::EmbodimentFrame,
            Message::TaskComplete(_) => MessageType::TaskComplete,
            Message::PoseSample(_) => MessageType::PoseSample,
            Message::ButtonEvent(_) => MessageType::ButtonEvent,
            Message::SnapshotRequest(_) => MessageType::SnapshotRequest,
            Message::ButtonAck(_) => MessageType::ButtonAck,
            Message::Reject(_) => MessageType::Reject,
        }
    }

    pub fn channel(&self) -> Channel {
        self.kind().channel()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub seq: u32,
    #[serde(flatten)]
    pub message: Message,
}

impl Frame {
    pub fn new(seq: u32, message: Message) -> Self {
        Self { seq, message }
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32s(&mut self, v: &[f32]) {
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
    fn short_str(&mut self, s: &str, what: &'static str) -> Result<(), ProtocolError> {
        let n = u8::try_from(s.len()).map_err(|_| ProtocolError::Oversize(what))?;
        self.u8(n);
        self.0.extend_from_slice(s.as_bytes());
        Ok(())
    }
}

pub fn encode(frame: &Frame) -> Result<Vec<u8>, ProtocolError> {
    let mut w = Writer(Vec::with_capacity(32));
    match &frame.message {
        Message::Join(m) => {
            w.u16(m.udp_port);
            w.short_str(&m.name, "name")?;
        }
        Message::RoleAssign(m) => {
            w.u8(m.participant);
            w.u8(m.role);
        }
        Message::TaskStart(m) => {
            w.u8(m.task);
            w.u8(m.condition);
            w.u32(m.puzzle);
        }
        Message::StateSnapshot(m) => {
            w.u8(m.columns);
            w.u8(m.rows);
            if m.cubes.len() > 255 {
                return Err(ProtocolError::Oversize("snapshot"));
            }
            for c in &m.cubes {
                w.0.extend_from_slice(&[c.id, c.color, c.col, c.row, c.flags]);
            }
        }
        Message::StateDelta(m) => w.0.extend_from_slice(&[m.op as u8, m.cube, m.col, m.row]),
        Message::Highlight(m) => w.u8(m.cube),
        Message::EmbodimentFrame(m) => {
            if m.points.len() > MAX_POINTS_PER_FRAME {
                return Err(ProtocolError::Oversize("point set"));
            }
            w.u32(m.frame_seq);
            w.u64(m.capture_us);
            w.u8(JOINT_COUNT as u8);
            for j in &m.joints {
                w.f32s(j);
            }
            w.u16(m.points.len() as u16);
            for p in &m.points {
                w.f32s(&p.position);
                w.0.extend_from_slice(&p.rgb);
            }
        }
        Message::TaskComplete(m) => w.u8(m.task),
        Message::PoseSample(m) => {
            w.u64(m.timestamp_us);
            w.f32s(&m.head);
            w.f32s(&m.hand);
            w.f32s(&m.orientation);
        }
        Message::ButtonEvent(m) => {
            w.u64(m.timestamp_us);
            w.u8(m.button);
        }
        Message::SnapshotRequest(_) => {}
        Message::ButtonAck(m) => w.u64(m.timestamp_us),
        Message::Reject(m) => {
            w.u8(m.code as u8);
            w.0.extend_from_slice(m.text.as_bytes());
        }
    }
    let payload = w.0;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(frame.message.kind() as u8);
    out.extend_from_slice(&frame.seq.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Parsed fixed header: type, seq and payload length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub kind: MessageType,
    pub seq: u32,
    pub len: usize,
}

pub fn decode_header(buf: &[u8]) -> Result<Header, ProtocolError> {
    if buf.len() < HEADER_LEN {
        return Err(ProtocolError::TruncatedPayload { need: HEADER_LEN, have: buf.len() });
    }
    let magic: [u8; 4] = buf[0..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(ProtocolError::BadMagic(magic));
    }
    if buf[4] != VERSION {
        return Err(ProtocolError::BadVersion(buf[4]));
    }
    let kind = MessageType::from_code(buf[5]).ok_or(ProtocolError::UnknownType(buf[5]))?;
    let seq = u32::from_le_bytes(buf[6..10].try_into().expect("4 bytes"));
    let len = u32::from_le_bytes(buf[10..14].try_into().expect("4 bytes")) as usize;
    if len > MAX_PAYLOAD {
        return Err(ProtocolError::LengthMismatch(kind));
    }
    Ok(Header { kind, seq, len })
}

struct Reader<'a> {
    buf: &'a [u8],
    kind: MessageType,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        if self.buf.len() < n {
            return Err(ProtocolError::LengthMismatch(self.kind));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, ProtocolError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f32s<const N: usize>(&mut self) -> Result<[f32; N], ProtocolError> {
        let mut out = [0.0; N];
        for x in &mut out {
            *x = f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes"));
        }
        Ok(out)
    }
    fn utf8(&mut self, n: usize, what: &'static str) -> Result<String, ProtocolError> {
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| ProtocolError::BadValue(what))
    }
    fn rest(&mut self) -> &'a [u8] {
        std::mem::take(&mut self.buf)
    }
}

fn decode_payload(kind: MessageType, payload: &[u8]) -> Result<Message, ProtocolError> {
    let mut r = Reader { buf: payload, kind };
    let msg = match kind {
        MessageType::Join => {
            let udp_port = r.u16()?;
            let n = r.u8()? as usize;
            Message::Join(Join { udp_port, name: r.utf8(n, "name")? })
        }
        MessageType::RoleAssign => {
            let participant = r.u8()?;
            let role = r.u8()?;
            if !(1..=2).contains(&role) {
                return Err(ProtocolError::BadValue("role"));
            }
            Message::RoleAssign(RoleAssign { participant, role })
        }
        MessageType::TaskStart => {
            let task = r.u8()?;
            let condition = r.u8()?;
            if condition > 7 {
                return Err(ProtocolError::BadValue("condition"));
            }
            Message::TaskStart(TaskStart { task, condition, puzzle: r.u32()? })
        }
        MessageType::StateSnapshot => {
            let columns = r.u8()?;
            let rows = r.u8()?;
            let body = r.rest();
            if !body.len().is_multiple_of(5) {
                return Err(ProtocolError::LengthMismatch(kind));
            }
            let cubes = body
                .chunks_exact(5)
                .map(|c| CubeRecord { id: c[0], color: c[1], col: c[2], row: c[3], flags: c[4] })
                .collect();
            Message::StateSnapshot(Snapshot { columns, rows, cubes })
        }
        MessageType::StateDelta => {
            let op = match r.u8()? {
                1 => DeltaOp::Select,
                2 => DeltaOp::Pick,
                3 => DeltaOp::Drop,
                4 => DeltaOp::Deselect,
                _ => return Err(ProtocolError::BadValue("delta op")),
            };
            Message::StateDelta(Delta { op, cube: r.u8()?, col: r.u8()?, row: r.u8()? })
        }
        MessageType::Highlight => Message::Highlight(Highlight { cube: r.u8()? }),
        MessageType::EmbodimentFrame => {
            let frame_seq = r.u32()?;
            let capture_us = r.u64()?;
            if r.u8()? as usize != JOINT_COUNT {
                return Err(ProtocolError::BadValue("joint count"));
            }
            let mut joints = [[0.0; 3]; JOINT_COUNT];
            for j in &mut joints {
                *j = r.f32s()?;
            }
            let n = r.u16()? as usize;
            if n > MAX_POINTS_PER_FRAME {
                return Err(ProtocolError::Oversize("point set"));
            }
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                let position = r.f32s()?;
                let rgb = r.take(3)?.try_into().expect("3 bytes");
                points.push(PointSample { position, rgb });
            }
            Message::EmbodimentFrame(EmbodimentFrame { frame_seq, capture_us, joints, points })
        }
        MessageType::TaskComplete => Message::TaskComplete(TaskComplete { task: r.u8()? }),
        MessageType::PoseSample => Message::PoseSample(PoseSample {
            timestamp_us: r.u64()?,
            head: r.f32s()?,
            hand: r.f32s()?,
            orientation: r.f32s()?,
        }),
        MessageType::ButtonEvent => Message::ButtonEvent(ButtonEvent { timestamp_us: r.u64()?, button: r.u8()? }),
        MessageType::SnapshotRequest => Message::SnapshotRequest(Empty {}),
        MessageType::ButtonAck => Message::ButtonAck(ButtonAck { timestamp_us: r.u64()? }),
        MessageType::Reject => {
            let code = RejectCode::from_code(r.u8()?).ok_or(ProtocolError::BadValue("reject code"))?;
            let n = r.buf.len();
            Message::Reject(Reject { code, text: r.utf8(n, "reject text")? })
        }
    };
    if !r.buf.is_empty() {
        return Err(ProtocolError::LengthMismatch(kind));
    }
    Ok(msg)
}

/// Decodes the first frame in `buf`; returns it with the number of bytes consumed.
pub fn decode_prefix(buf: &[u8]) -> Result<(Frame, usize), ProtocolError> {
    let h = decode_header(buf)?;
    let total = HEADER_LEN + h.len;
    if buf.len() < total {
        return Err(ProtocolError::TruncatedPayload { need: total, have: buf.len() });
    }
    let message = decode_payload(h.kind, &buf[HEADER_LEN..total])?;
    Ok((Frame { seq: h.seq, message }, total))
}

/// Decodes exactly one frame; trailing bytes are a length mismatch.
pub fn decode(buf: &[u8]) -> Result<Frame, ProtocolError> {
    let (frame, used) = decode_prefix(buf)?;
    if used != buf.len() {
        return Err(ProtocolError::LengthMismatch(frame.message.kind()));
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn highlight_frame_layout() {
        let bytes = encode(&Frame::new(7, Message::Highlight(Highlight { cube: 3 }))).unwrap();
        assert_eq!(bytes, [b'N', b'S', b'P', b'1', 1, 6, 7, 0, 0, 0, 1, 0, 0, 0, 3]);
        assert_eq!(decode(&bytes).unwrap().message, Message::Highlight(Highlight { cube: 3 }));
    }

    #[test]
    fn corrupted_magic() {
        let mut bytes = encode(&Frame::new(0, Message::Highlight(Highlight { cube: 3 }))).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(ProtocolError::BadMagic(_))));
    }

    #[test]
    fn header_errors() {
        let good = encode(&Frame::new(1, Message::TaskComplete(TaskComplete { task: 2 }))).unwrap();
        let mut t = good.clone();
        t[5] = 99;
        assert_eq!(decode(&t), Err(ProtocolError::UnknownType(99)));
        assert!(matches!(decode(&good[..good.len() - 1]), Err(ProtocolError::TruncatedPayload { .. })));
        assert!(matches!(decode(&good[..5]), Err(ProtocolError::TruncatedPayload { .. })));
        let mut long = good.clone();
        long[10] = 2;
        long.push(0);
        assert_eq!(decode(&long), Err(ProtocolError::LengthMismatch(MessageType::TaskComplete)));
        let mut trailing = good;
        trailing.push(0);
        assert!(matches!(decode(&trailing), Err(ProtocolError::LengthMismatch(_))));
    }

    #[test]
    fn channels() {
        assert_eq!(MessageType::PoseSample.channel(), Channel::Unreliable);
        assert_eq!(MessageType::ButtonEvent.channel(), Channel::Unreliable);
        assert_eq!(MessageType::EmbodimentFrame.channel(), Channel::Reliable);
        assert_eq!(MessageType::ButtonAck.channel(), Channel::Reliable);
    }

    #[test]
    fn decode_prefix_walks_a_stream() {
        let a = encode(&Frame::new(0, Message::SnapshotRequest(Empty {}))).unwrap();
        let b = encode(&Frame::new(1, Message::Highlight(Highlight { cube: 0 }))).unwrap();
        let stream = [a.clone(), b].concat();
        let (f, n) = decode_prefix(&stream).unwrap();
        assert_eq!((f.seq, n), (0, a.len()));
        assert_eq!(decode(&stream[n..]).unwrap().seq, 1);
    }
}
