use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use super::{ALGEBRAIC_EPS, Point, Vector};

/// A homogeneous 4×4 transform built from identity, a half turn about +y
/// and a reflection across the `x = 0` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMap(Matrix4<f64>);

impl RigidMap {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    /// Rotation by 180° about +y: `diag(-1, 1, -1)` on xyz.
    pub fn half_turn_y() -> Self {
        Self(Matrix4::from_diagonal(&nalgebra::Vector4::new(-1.0, 1.0, -1.0, 1.0)))
    }

    /// Reflection across the `x = 0` plane: `diag(-1, 1, 1)` on xyz.
    pub fn mirror_x() -> Self {
        Self(Matrix4::from_diagonal(&nalgebra::Vector4::new(-1.0, 1.0, 1.0, 1.0)))
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &RigidMap) -> RigidMap {
        RigidMap(next.0 * self.0)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn linear(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn determinant(&self) -> f64 {
        self.linear().determinant()
    }

    pub fn inverse(&self) -> RigidMap {
        RigidMap(self.0.try_inverse().expect("rigid maps are invertible"))
    }

    pub fn apply_point(&self, p: &Point) -> Point {
        self.0.transform_point(p)
    }

    pub fn apply_vector(&self, v: &Vector) -> Vector {
        self.0.transform_vector(v)
    }

    pub fn approx_eq(&self, other: &RigidMap, tol: f64) -> bool {
        (self.0 - other.0).abs().max() <= tol
    }

    pub fn is_identity(&self) -> bool {
        self.approx_eq(&RigidMap::identity(), ALGEBRAIC_EPS)
    }

    /// Row-major flattening of the 4×4 matrix.
    pub fn to_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = self.0[(r, c)];
            }
        }
        out
    }

    pub fn from_row_major(m: [f64; 16]) -> Self {
        Self(Matrix4::from_row_slice(&m))
    }
}

impl Serialize for RigidMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        <[f64; 16]>::deserialize(d).map(Self::from_row_major)
    }
}
