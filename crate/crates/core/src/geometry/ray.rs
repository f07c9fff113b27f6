use nalgebra::{Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Point, Vector, check_unit};

/// Pointer forward direction in the device frame.
pub const POINTER_FORWARD: Vector = Vector::new(0.0, 0.0, -1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(a: Point, b: Point) -> Self {
        Self { min: a.inf(&b), max: a.sup(&b) }
    }

    pub fn cube(center: Point, edge: f64) -> Self {
        let h = Vector::repeat(edge / 2.0);
        Self { min: center - h, max: center + h }
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Entry distance along `origin + t·dir`, or `None` on a miss. A ray
    /// starting inside the box enters at `t = 0`.
    pub fn entry(&self, origin: &Point, dir: &Vector) -> Option<f64> {
        let mut t_min = 0.0_f64;
        let mut t_max = f64::INFINITY;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let (mut t0, mut t1) = ((self.min[i] - origin[i]) * inv, (self.max[i] - origin[i]) * inv);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_min = t_min.max(t0);
            t_max = t_max.min(t1);
            if t_min > t_max {
                return None;
            }
        }
        Some(t_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Index into the scene slice.
    pub index: usize,
    pub point: Point,
    pub distance: f64,
}

/// Direction the pointer aims in, given its orientation as (x, y, z, w).
pub fn ray_direction(orientation: [f64; 4]) -> Result<Vector, GeometryError> {
    check_unit(orientation)?;
    let [x, y, z, w] = orientation;
    let q = UnitQuaternion::new_unchecked(nalgebra::Quaternion::new(w, x, y, z));
    Ok(q * POINTER_FORWARD)
}

/// Orientation (x, y, z, w) that makes the pointer at `from` aim exactly at `to`.
pub fn aim_orientation(from: &Point, to: &Point) -> [f64; 4] {
    let dir = to - from;
    let q = UnitQuaternion::rotation_between(&POINTER_FORWARD, &dir)
        .unwrap_or_else(|| UnitQuaternion::from_axis_angle(&Unit::new_normalize(Vector::y()), std::f64::consts::PI));
    let c = q.into_inner().coords;
    [c.x, c.y, c.z, c.w]
}

/// Laser pointing: casts from the hand along the device orientation and
/// returns the nearest box by entry distance (ties go to the lower index).
pub fn resolve_ray(hand: &Point, orientation: [f64; 4], scene: &[Aabb]) -> Result<Option<RayHit>, GeometryError> {
    let dir = ray_direction(orientation)?;
    Ok(cast(hand, &dir, scene))
}

pub(crate) fn cast(origin: &Point, dir: &Vector, scene: &[Aabb]) -> Option<RayHit> {
    let dir = dir.normalize();
    let mut best: Option<RayHit> = None;
    for (index, b) in scene.iter().enumerate() {
        if let Some(t) = b.entry(origin, &dir)
            && best.is_none_or(|h| t < h.distance) {
                best = Some(RayHit { index, point: origin + dir * t, distance: t });
            }
    }
    best
}
