//! Shared-frame geometry for the tunnel volume between two displays.
//!
//! Canonical frame: origin at the volume centre, `+x` to the instructor's
//! right, `+y` up, `+z` from the instructor's display toward the assembler's.
//! The instructor's display sits at `z = -depth/2`, the assembler's at
//! `z = +depth/2`. Viewing in this frame is left-handed, so the normal that
//! points from a display toward its viewer is `up × right`.

mod condition;
mod cursor;
mod plane;
mod projection;
pub(crate) mod ray;
mod rigid;
mod volume;

pub use condition::{ConditionName, ConditionSpec, Embodiment, Entity, PointOfView, WorkspaceMode, glue_transform};
pub use cursor::{CursorHit, cursor_on_screen};
pub use plane::DisplayPlane;
pub use projection::{project_point, projection_matrix};
pub use ray::{Aabb, RayHit, aim_orientation, ray_direction, resolve_ray};
pub use rigid::RigidMap;
pub use volume::{Stance, Viewer, WorkspaceVolume, build_volume};

use nalgebra::{Point3, Quaternion, Vector3};
use serde::{Deserialize, Serialize};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

/// Tolerance for geometric predicates (meters / radians).
pub const GEOMETRIC_EPS: f64 = 1e-6;
/// Tolerance for algebraic identities on matrices.
pub const ALGEBRAIC_EPS: f64 = 1e-9;

/// 55 inches in meters.
pub const DEFAULT_DIAGONAL_M: f64 = 55.0 * 0.0254;
/// Depth of the tunnel between the two displays.
pub const DEFAULT_DEPTH_M: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("volume depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("display plane has zero area")]
    DegeneratePlane,
    #[error("display plane edges are not orthogonal (off by {0:.3e} rad)")]
    NonOrthogonalPlane(f64),
    #[error("eye lies in the screen plane (distance {0:.3e} m)")]
    EyeInScreenPlane(f64),
    #[error("eye is behind the screen (distance {0:.3e} m)")]
    EyeBehindScreen(f64),
    #[error("invalid clip range near={near} far={far}")]
    BadClipRange { near: f64, far: f64 },
    #[error("orientation quaternion is not unit length (norm {0})")]
    NonUnitQuaternion(f64),
    #[error("line is parallel to the screen plane")]
    ParallelLine,
}

/// Tracked body pose of a participant, in the canonical frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub head: Point,
    pub hand: Point,
    /// Handheld pointer orientation as (x, y, z, w).
    pub orientation: [f64; 4],
}

impl Pose {
    pub fn new(head: Point, hand: Point, orientation: [f64; 4]) -> Result<Self, GeometryError> {
        check_unit(orientation)?;
        Ok(Self { head, hand, orientation })
    }

    pub fn quaternion(&self) -> Quaternion<f64> {
        let [x, y, z, w] = self.orientation;
        Quaternion::new(w, x, y, z)
    }
}

pub(crate) fn check_unit(q: [f64; 4]) -> Result<(), GeometryError> {
    let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > GEOMETRIC_EPS {
        return Err(GeometryError::NonUnitQuaternion(norm));
    }
    Ok(())
}

/// Width and height of a display with the given diagonal and aspect ratio.
pub fn diagonal_to_size(diagonal: f64, aspect_w: f64, aspect_h: f64) -> (f64, f64) {
    let hyp = aspect_w.hypot(aspect_h);
    (diagonal * aspect_w / hyp, diagonal * aspect_h / hyp)
}
