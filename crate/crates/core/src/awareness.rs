//! Reference-frame consistency analysis.
//!
//! For a condition, works out which communication channels survive the trip
//! from the instructor's room to the assembler's rendering. Every cell is
//! derived geometrically: an instructor pointing pose is synthesized for each
//! board cell, pushed through the condition's glue transforms and resolved
//! again against the rendered board. Nothing is looked up by condition name.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Role;
use crate::board::{BoardSpec, BoardState, Cell, CubeId};
use crate::geometry::{
    ConditionName, ConditionSpec, Entity, GeometryError, Point, RigidMap, Stance, Vector, WorkspaceVolume, aim_orientation,
    cursor_on_screen, glue_transform, ray_direction,
};

/// Default angular threshold below which two pointing candidates are confusable.
pub const DEFAULT_AMBIGUITY_THRESHOLD: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Match,
    Mismatch,
}

impl Channel {
    fn from_bool(ok: bool) -> Self {
        if ok { Channel::Match } else { Channel::Mismatch }
    }

    pub fn is_match(self) -> bool {
        self == Channel::Match
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum YesNo {
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMatchReport {
    pub condition: ConditionSpec,
    pub name: Option<ConditionName>,
    pub lateral_pointing: Channel,
    pub depth_pointing: Channel,
    pub lateral_verbal: Channel,
    pub depth_verbal: Channel,
    pub shared_visible_face: YesNo,
}

impl ChannelMatchReport {
    /// Whether the instruction channel along the board's columns (lateral) or rows (depth) can be misread.
    pub fn verbal(&self, lateral: bool) -> Channel {
        if lateral { self.lateral_verbal } else { self.depth_verbal }
    }

    pub fn pointing(&self, lateral: bool) -> Channel {
        if lateral { self.lateral_pointing } else { self.depth_pointing }
    }
}

/// Cell the assembler reads off the instructor's rendered pointing ray
/// when the instructor aims at `cell`, or `None` if the ray misses the board.
pub fn perceived_cell(cond: ConditionSpec, volume: &WorkspaceVolume, board: &BoardSpec, stance: &Stance, cell: Cell) -> Option<Cell> {
    let hand = stance.hand(Role::Instructor, volume);
    let dir = ray_direction(aim_orientation(&hand, &board.cube_center(cell))).expect("aim yields a unit quaternion");
    let body = glue_transform(cond, Entity::Embodiment);
    let workspace = glue_transform(cond, Entity::Workspace);
    board.pointed_cell(&body.apply_point(&hand), &body.apply_vector(&dir), &workspace)
}

pub fn channel_report(cond: ConditionSpec, volume: &WorkspaceVolume, board: &BoardSpec) -> ChannelMatchReport {
    channel_report_with(cond, volume, board, &Stance::default())
}

pub fn channel_report_with(cond: ConditionSpec, volume: &WorkspaceVolume, board: &BoardSpec, stance: &Stance) -> ChannelMatchReport {
    let workspace = glue_transform(cond, Entity::Workspace);

    let (mut lateral_ok, mut depth_ok) = (true, true);
    for cell in board.cells() {
        match perceived_cell(cond, volume, board, stance, cell) {
            Some(seen) => {
                lateral_ok &= seen.col == cell.col;
                depth_ok &= seen.row == cell.row;
            }
            None => {
                lateral_ok = false;
                depth_ok = false;
            }
        }
    }

    let (lateral_verbal, depth_verbal) = verbal_orderings(volume, board, stance, &workspace);

    ChannelMatchReport {
        condition: cond,
        name: cond.name(),
        lateral_pointing: Channel::from_bool(lateral_ok),
        depth_pointing: Channel::from_bool(depth_ok),
        lateral_verbal,
        depth_verbal,
        shared_visible_face: shared_face(volume, board, stance, &workspace),
    }
}

/// Screen (u, v) of a point as seen by `role` through their display.
fn screen_uv(volume: &WorkspaceVolume, stance: &Stance, role: Role, p: &Point) -> Option<(f64, f64)> {
    let eye = stance.eye(role, volume);
    cursor_on_screen(&eye, p, &volume.screen(role)).ok().map(|c| (c.u, c.v))
}

fn order_by(keys: &[(u8, f64)]) -> Vec<u8> {
    let mut k = keys.to_vec();
    k.sort_by(|a, b| a.1.total_cmp(&b.1));
    k.into_iter().map(|(i, _)| i).collect()
}

/// Left-to-right column order per row, and near-to-far row order per column,
/// compared between the instructor's screen and the assembler's.
fn verbal_orderings(volume: &WorkspaceVolume, board: &BoardSpec, stance: &Stance, workspace: &RigidMap) -> (Channel, Channel) {
    let seen = |role: Role, cell: Cell| {
        let p = board.cube_center(cell);
        let p = if role == Role::Assembler { workspace.apply_point(&p) } else { p };
        screen_uv(volume, stance, role, &p)
    };

    let mut lateral = true;
    for row in 0..board.rows {
        let mut orders = Vec::new();
        for role in [Role::Instructor, Role::Assembler] {
            let keys: Option<Vec<(u8, f64)>> =
                (0..board.columns).map(|col| seen(role, Cell::new(col, row)).map(|(u, _)| (col, u))).collect();
            orders.push(keys.map(|k| order_by(&k)));
        }
        lateral &= orders[0].is_some() && orders[0] == orders[1];
    }

    let mut depth = true;
    for col in 0..board.columns {
        let mut orders = Vec::new();
        for role in [Role::Instructor, Role::Assembler] {
            let keys: Option<Vec<(u8, f64)>> =
                (0..board.rows).map(|row| seen(role, Cell::new(col, row)).map(|(_, v)| (row, v))).collect();
            orders.push(keys.map(|k| order_by(&k)));
        }
        depth &= orders[0].is_some() && orders[0] == orders[1];
    }
    (Channel::from_bool(lateral), Channel::from_bool(depth))
}

/// Whether both participants face the same side face of a cube at the board centre.
fn shared_face(volume: &WorkspaceVolume, board: &BoardSpec, stance: &Stance, workspace: &RigidMap) -> YesNo {
    let far = board.cube_center(Cell::new(board.columns - 1, board.rows - 1));
    let center = nalgebra::center(&board.cube_center(Cell::new(0, 0)), &far);
    let normals = [Vector::x(), -Vector::x(), Vector::z(), -Vector::z()];

    let winner = |eye: Point, center: Point, map: &RigidMap| -> usize {
        let to_eye = eye - center;
        (0..normals.len())
            .max_by(|&a, &b| map.apply_vector(&normals[a]).dot(&to_eye).total_cmp(&map.apply_vector(&normals[b]).dot(&to_eye)))
            .expect("four faces")
    };
    let instructor = winner(stance.eye(Role::Instructor, volume), center, &RigidMap::identity());
    let assembler = winner(stance.eye(Role::Assembler, volume), workspace.apply_point(&center), workspace);
    if instructor == assembler { YesNo::Yes } else { YesNo::No }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpaceMatrix {
    pub reports: Vec<ChannelMatchReport>,
}

/// Channel reports for all eight (pov, embodiment, workspace) triples.
pub fn design_space_matrix(volume: &WorkspaceVolume, board: &BoardSpec) -> DesignSpaceMatrix {
    DesignSpaceMatrix { reports: ConditionSpec::all().into_iter().map(|c| channel_report(c, volume, board)).collect() }
}

impl DesignSpaceMatrix {
    pub fn get(&self, cond: impl Into<ConditionSpec>) -> Option<&ChannelMatchReport> {
        let cond = cond.into();
        self.reports.iter().find(|r| r.condition == cond)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }
}

impl fmt::Display for DesignSpaceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |c: Channel| if c.is_match() { "Match" } else { "Mismatch" };
        writeln!(
            f,
            "{:<5} {:<10} {:<11} {:<10} {:<9} {:<9} {:<9} {:<9} shared.face",
            "name", "pov", "embodiment", "workspace", "lat.point", "dep.point", "lat.verb", "dep.verb"
        )?;
        for r in &self.reports {
            writeln!(
                f,
                "{:<5} {:<10} {:<11} {:<10} {:<9} {:<9} {:<9} {:<9} {}",
                r.name.map_or("-", |n| n.as_str()),
                format!("{:?}", r.condition.pov),
                format!("{:?}", r.condition.embodiment),
                format!("{:?}", r.condition.workspace),
                cell(r.lateral_pointing),
                cell(r.depth_pointing),
                cell(r.lateral_verbal),
                cell(r.depth_verbal),
                if r.shared_visible_face == YesNo::Yes { "Yes" } else { "No" },
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub cube: CubeId,
    /// Angle at the eye between the cube centre and the nearest point of the ray.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityReport {
    pub eye: Point,
    pub origin: Point,
    pub direction: Vector,
    pub candidates: Vec<Candidate>,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AwarenessError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("ambiguity threshold must be positive, got {0}")]
    BadThreshold(f64),
}

/// Ranks the cubes by how close they appear to a pointing ray from `eye`'s
/// point of view; flags the ray as ambiguous when the two best candidates
/// are less than `threshold` radians apart.
pub fn ambiguity_report(
    eye: &Point,
    hand: &Point,
    orientation: [f64; 4],
    board: &BoardState,
    threshold: f64,
) -> Result<AmbiguityReport, AwarenessError> {
    if !(threshold > 0.0) {
        return Err(AwarenessError::BadThreshold(threshold));
    }
    let dir = ray_direction(orientation)?;
    let mut candidates: Vec<Candidate> = board
        .scene()
        .into_iter()
        .map(|(cube, b)| {
            let c = b.center();
            let t = (c - hand).dot(&dir).max(0.0);
            let nearest = hand + dir * t;
            let (a, b) = (c - eye, nearest - eye);
            let angle = if a.norm() == 0.0 || b.norm() == 0.0 { 0.0 } else { a.angle(&b) };
            Candidate { cube, angle }
        })
        .collect();
    candidates.sort_by(|a, b| a.angle.total_cmp(&b.angle).then(a.cube.cmp(&b.cube)));
    let ambiguous = candidates.len() >= 2 && candidates[1].angle - candidates[0].angle < threshold;
    Ok(AmbiguityReport { eye: *eye, origin: *hand, direction: dir, candidates, ambiguous })
}
