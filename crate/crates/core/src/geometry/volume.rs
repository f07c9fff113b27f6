use nalgebra::{Isometry3, Rotation3, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{DisplayPlane, GEOMETRIC_EPS, GeometryError, Point, Vector};
use crate::Role;

pub type Viewer = Role;

/// The closed box between the two displays, expressed in the canonical frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceVolume {
    depth: f64,
    local_plane: DisplayPlane,
    remote_plane: DisplayPlane,
    /// Maps the instructor's room coordinates (as the plane was given) into the canonical frame.
    #[serde(skip, default = "Isometry3::identity")]
    local_to_canonical: Isometry3<f64>,
}

/// Builds the tunnel volume behind `local`, `depth` meters deep.
///
/// `local` may be given in any room coordinates; the returned volume is
/// expressed in the canonical frame and remembers the room → canonical map.
pub fn build_volume(local: &DisplayPlane, depth: f64) -> Result<WorkspaceVolume, GeometryError> {
    if !(depth > 0.0) {
        return Err(GeometryError::NonPositiveDepth(depth));
    }
    let (w, h) = (local.width(), local.height());
    if w * h <= GEOMETRIC_EPS * GEOMETRIC_EPS {
        return Err(GeometryError::DegeneratePlane);
    }
    let canon_local = DisplayPlane::from_center(Point::new(0.0, 0.0, -depth / 2.0), Vector::x(), Vector::y(), w, h)?;
    let remote = canon_local.translated(Vector::new(0.0, 0.0, depth));

    // room basis (right, up, away-from-viewer) -> canonical (x, y, z)
    let away = -local.normal();
    let basis = nalgebra::Matrix3::from_rows(&[
        local.right().transpose(),
        local.up().transpose(),
        away.transpose(),
    ]);
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(basis));
    let moved_center = rotation * local.center();
    let translation = Translation3::new(-moved_center.x, -moved_center.y, -depth / 2.0 - moved_center.z);
    let local_to_canonical = Isometry3::from_parts(translation, rotation);

    Ok(WorkspaceVolume { depth, local_plane: canon_local, remote_plane: remote, local_to_canonical })
}

impl WorkspaceVolume {
    /// 55" portrait display (9:16) with a 50 cm tunnel.
    pub fn standard() -> Self {
        let (w, h) = super::diagonal_to_size(super::DEFAULT_DIAGONAL_M, 9.0, 16.0);
        let plane = DisplayPlane::from_center(Point::origin(), Vector::x(), Vector::y(), w, h)
            .expect("standard display is valid");
        build_volume(&plane, super::DEFAULT_DEPTH_M).expect("standard depth is positive")
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn width(&self) -> f64 {
        self.local_plane.width()
    }

    pub fn height(&self) -> f64 {
        self.local_plane.height()
    }

    /// The instructor's display, as the instructor sees it.
    pub fn local_plane(&self) -> &DisplayPlane {
        &self.local_plane
    }

    /// The assembler's display: the local plane pushed `depth` along +z.
    pub fn remote_plane(&self) -> &DisplayPlane {
        &self.remote_plane
    }

    /// The display a participant looks through, with corners ordered from
    /// their side (its `normal()` points at them).
    pub fn screen(&self, viewer: Viewer) -> DisplayPlane {
        match viewer {
            Role::Instructor => self.local_plane,
            Role::Assembler => self.remote_plane.flipped(),
        }
    }

    /// Height of the volume's floor, where the board rests.
    pub fn floor_y(&self) -> f64 {
        -self.height() / 2.0
    }

    pub fn local_to_canonical(&self) -> &Isometry3<f64> {
        &self.local_to_canonical
    }

    pub fn contains(&self, p: &Point) -> bool {
        let (hw, hh, hd) = (self.width() / 2.0, self.height() / 2.0, self.depth / 2.0);
        p.x.abs() <= hw + GEOMETRIC_EPS && p.y.abs() <= hh + GEOMETRIC_EPS && p.z.abs() <= hd + GEOMETRIC_EPS
    }

    /// Unsigned distances of `p` to the instructor's and assembler's displays.
    pub fn plane_distances(&self, p: &Point) -> (f64, f64) {
        (
            self.local_plane.signed_distance(p).abs(),
            self.remote_plane.signed_distance(p).abs(),
        )
    }
}

/// Where a participant stands and holds the pointer relative to their display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stance {
    /// Distance from the display to the participant's body.
    pub distance: f64,
    /// Eye height in canonical `y`.
    pub eye_height: f64,
    /// Hand height in canonical `y`.
    pub hand_height: f64,
    /// How far in front of the chest the pointing hand is held.
    pub reach: f64,
}

impl Default for Stance {
    fn default() -> Self {
        Self { distance: 1.0, eye_height: 0.45, hand_height: 0.3, reach: 0.35 }
    }
}

impl Stance {
    fn toward_volume(role: Role) -> f64 {
        match role {
            Role::Instructor => 1.0,
            Role::Assembler => -1.0,
        }
    }

    fn body_z(&self, role: Role, volume: &WorkspaceVolume) -> f64 {
        -Self::toward_volume(role) * (volume.depth() / 2.0 + self.distance)
    }

    pub fn eye(&self, role: Role, volume: &WorkspaceVolume) -> Point {
        Point::new(0.0, self.eye_height, self.body_z(role, volume))
    }

    pub fn hand(&self, role: Role, volume: &WorkspaceVolume) -> Point {
        let z = self.body_z(role, volume) + Self::toward_volume(role) * self.reach;
        Point::new(0.0, self.hand_height, z)
    }
}
