use super::message::{CubeRecord, Delta, DeltaOp, Frame, Message, Snapshot};
use crate::board::{BoardError, BoardSpec, BoardState, Cell, Color, Cube, CubeId, Placement};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplicaError {
    #[error("sequence gap: expected {expected}, got {got}")]
    SeqGap { expected: u32, got: u32 },
    #[error("snapshot does not fit the local board: {0}")]
    BadSnapshot(String),
    #[error(transparent)]
    Board(#[from] BoardError),
}

impl Delta {
    pub fn select(cube: CubeId) -> Self {
        Self { op: DeltaOp::Select, cube: cube.0, col: 0, row: 0 }
    }

    pub fn pick(cube: CubeId) -> Self {
        Self { op: DeltaOp::Pick, cube: cube.0, col: 0, row: 0 }
    }

    pub fn drop(cube: CubeId, cell: Cell) -> Self {
        Self { op: DeltaOp::Drop, cube: cube.0, col: cell.col, row: cell.row }
    }

    pub fn deselect(cube: CubeId) -> Self {
        Self { op: DeltaOp::Deselect, cube: cube.0, col: 0, row: 0 }
    }
}

/// Wire snapshot of a board; `redact` hides the colors.
pub fn snapshot_of(board: &BoardState, redact: bool) -> Snapshot {
    let mut cubes: Vec<&Cube> = board.cubes().iter().collect();
    cubes.sort_by_key(|c| c.id);
    let cubes = cubes
        .into_iter()
        .map(|c| {
            let mut flags = 0;
            let (col, row) = match c.place {
                Placement::At(cell) => (cell.col, cell.row),
                Placement::Held => {
                    flags |= CubeRecord::HELD;
                    (CubeRecord::OFF_BOARD, CubeRecord::OFF_BOARD)
                }
            };
            if board.selection() == Some(c.id) {
                flags |= CubeRecord::SELECTED;
            }
            if board.highlight() == Some(c.id) {
                flags |= CubeRecord::HIGHLIGHTED;
            }
            let color = if redact { 0 } else { c.color.map_or(0, Color::code) };
            CubeRecord { id: c.id.0, color, col, row, flags }
        })
        .collect();
    Snapshot { columns: board.spec.columns, rows: board.spec.rows, cubes }
}

pub fn board_from_snapshot(spec: BoardSpec, snap: &Snapshot) -> Result<BoardState, ReplicaError> {
    if (snap.columns, snap.rows) != (spec.columns, spec.rows) {
        return Err(ReplicaError::BadSnapshot(format!(
            "board is {}x{}, snapshot is {}x{}",
            spec.columns, spec.rows, snap.columns, snap.rows
        )));
    }
    let (mut selection, mut held, mut highlight) = (None, None, None);
    let mut cubes = Vec::with_capacity(snap.cubes.len());
    for r in &snap.cubes {
        let id = CubeId(r.id);
        let color = match r.color {
            0 => None,
            code => Some(Color::from_code(code).ok_or_else(|| ReplicaError::BadSnapshot(format!("color code {code}")))?),
        };
        let place = if r.flags & CubeRecord::HELD != 0 {
            held = Some(id);
            Placement::Held
        } else {
            Placement::At(Cell::new(r.col, r.row))
        };
        if r.flags & CubeRecord::SELECTED != 0 {
            selection = Some(id);
        }
        if r.flags & CubeRecord::HIGHLIGHTED != 0 {
            highlight = Some(id);
        }
        cubes.push(Cube { id, color, place });
    }
    Ok(BoardState::from_parts(spec, cubes, selection, held, highlight)?)
}

/// Applies one authority delta to a replica board.
pub fn apply_delta(board: &BoardState, delta: &Delta) -> Result<BoardState, BoardError> {
    let mut next = board.clone();
    let cube = CubeId(delta.cube);
    match delta.op {
        DeltaOp::Select => next.select(cube)?,
        DeltaOp::Deselect => next.deselect()?,
        DeltaOp::Pick => {
            if next.selection() != Some(cube) {
                return Err(BoardError::NothingSelected);
            }
            next.pick()?;
        }
        DeltaOp::Drop => {
            if next.held() != Some(cube) {
                return Err(BoardError::NothingHeld);
            }
            next.drop_at(Cell::new(delta.col, delta.row))?;
        }
    }
    Ok(next)
}

/// Client-side copy of the authoritative board, fed by the reliable channel.
///
/// Every reliable frame consumes one sequence number. A gap puts the replica
/// into resync: state frames are dropped until a snapshot arrives.
#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    board: BoardState,
    next_seq: u32,
    resyncing: bool,
    highlight: Option<CubeId>,
    gaps: u64,
}

impl Replica {
    pub fn new(spec: BoardSpec) -> Self {
        let board = BoardState::new(spec, Vec::new()).expect("an empty board is valid");
        Self { board, next_seq: 0, resyncing: false, highlight: None, gaps: 0 }
    }

    pub fn board(&self) -> &BoardState {
        &self.board
    }

    /// Cube the authority last announced as highlighted.
    pub fn highlight(&self) -> Option<CubeId> {
        self.highlight
    }

    pub fn next_seq(&self) -> u32 {
        self.next_seq
    }

    pub fn is_resyncing(&self) -> bool {
        self.resyncing
    }

    pub fn gap_count(&self) -> u64 {
        self.gaps
    }

    /// Consumes one reliable frame. `Ok(false)` means the frame was dropped while resyncing.
    pub fn receive(&mut self, frame: &Frame) -> Result<bool, ReplicaError> {
        if self.resyncing {
            return match &frame.message {
                Message::StateSnapshot(s) if frame.seq >= self.next_seq => {
                    self.install(s)?;
                    self.next_seq = frame.seq.wrapping_add(1);
                    self.resyncing = false;
                    Ok(true)
                }
                _ => Ok(false),
            };
        }
        if frame.seq != self.next_seq {
            self.resyncing = true;
            self.gaps += 1;
            return Err(ReplicaError::SeqGap { expected: self.next_seq, got: frame.seq });
        }
        self.next_seq = self.next_seq.wrapping_add(1);
        match &frame.message {
            Message::StateSnapshot(s) => self.install(s)?,
            Message::StateDelta(d) => self.board = apply_delta(&self.board, d)?,
            Message::Highlight(h) => self.highlight = (h.cube != 0).then_some(CubeId(h.cube)),
            _ => {}
        }
        Ok(true)
    }

    fn install(&mut self, s: &Snapshot) -> Result<(), ReplicaError> {
        self.board = board_from_snapshot(self.board.spec, s)?;
        self.highlight = self.board.highlight();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WorkspaceVolume;
    use crate::protocol::message::Highlight;

    fn authority() -> BoardState {
        let spec = BoardSpec::standard(&WorkspaceVolume::standard());
        BoardState::with_cells(spec, &[Cell::new(4, 2), Cell::new(0, 0), Cell::new(7, 0), Cell::new(0, 4), Cell::new(7, 4)])
            .unwrap()
    }

    #[test]
    fn snapshot_then_deltas_track_authority() {
        let mut auth = authority();
        let mut rep = Replica::new(auth.spec);
        rep.receive(&Frame::new(0, Message::StateSnapshot(snapshot_of(&auth, false)))).unwrap();
        let deltas = [Delta::select(CubeId(3)), Delta::pick(CubeId(3)), Delta::drop(CubeId(3), Cell::new(2, 1))];
        for (i, d) in deltas.iter().enumerate() {
            auth = apply_delta(&auth, d).unwrap();
            rep.receive(&Frame::new(i as u32 + 1, Message::StateDelta(*d))).unwrap();
            assert_eq!(rep.board(), &auth);
        }
        assert_eq!(auth.cube(CubeId(3)).unwrap().cell(), Some(Cell::new(2, 1)));
    }

    #[test]
    fn gap_then_resync() {
        let mut auth = authority();
        let mut rep = Replica::new(auth.spec);
        rep.receive(&Frame::new(0, Message::StateSnapshot(snapshot_of(&auth, true)))).unwrap();
        auth = apply_delta(&auth, &Delta::select(CubeId(2))).unwrap();
        auth = apply_delta(&auth, &Delta::pick(CubeId(2))).unwrap();
        let err = rep.receive(&Frame::new(2, Message::StateDelta(Delta::pick(CubeId(2))))).unwrap_err();
        assert_eq!(err, ReplicaError::SeqGap { expected: 1, got: 2 });
        assert!(!rep.receive(&Frame::new(3, Message::Highlight(Highlight { cube: 2 }))).unwrap());
        rep.receive(&Frame::new(4, Message::StateSnapshot(snapshot_of(&auth, true)))).unwrap();
        assert_eq!(rep.board(), &auth.redacted());
        assert_eq!(rep.next_seq(), 5);
    }

    #[test]
    fn snapshot_round_trip_keeps_held_and_flags() {
        let mut auth = authority();
        auth.select(CubeId(5)).unwrap();
        auth.pick().unwrap();
        let snap = snapshot_of(&auth, false);
        let held = snap.cubes.iter().find(|c| c.id == 5).unwrap();
        assert_eq!((held.col, held.row, held.flags), (0xFF, 0xFF, 0b111));
        assert_eq!(board_from_snapshot(auth.spec, &snap).unwrap(), auth);
        assert!(snapshot_of(&auth, true).cubes.iter().all(|c| c.color == 0));
    }

    #[test]
    fn rejected_delta_leaves_board() {
        let auth = authority();
        assert_eq!(apply_delta(&auth, &Delta::pick(CubeId(2))), Err(BoardError::NothingSelected));
    }
}
