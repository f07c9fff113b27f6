use serde::{Deserialize, Serialize};

use super::{GEOMETRIC_EPS, GeometryError, Point, Vector};

/// A rectangular display surface given by three of its corners.
///
/// `right` runs lower-left → lower-right and `up` runs lower-left →
/// upper-left, both as seen by the person standing in front of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayPlane {
    lower_left: Point,
    lower_right: Point,
    upper_left: Point,
}

impl DisplayPlane {
    pub fn new(lower_left: Point, lower_right: Point, upper_left: Point) -> Result<Self, GeometryError> {
        let right = lower_right - lower_left;
        let up = upper_left - lower_left;
        if right.norm() <= GEOMETRIC_EPS || up.norm() <= GEOMETRIC_EPS {
            return Err(GeometryError::DegeneratePlane);
        }
        let cos = right.dot(&up) / (right.norm() * up.norm());
        let off = cos.clamp(-1.0, 1.0).asin().abs();
        if off > GEOMETRIC_EPS {
            return Err(GeometryError::NonOrthogonalPlane(off));
        }
        Ok(Self { lower_left, lower_right, upper_left })
    }

    /// Rectangle centred on `center`, spanned by the given right/up directions.
    pub fn from_center(
        center: Point,
        right: Vector,
        up: Vector,
        width: f64,
        height: f64,
    ) -> Result<Self, GeometryError> {
        if !(width > 0.0 && height > 0.0) || right.norm() == 0.0 || up.norm() == 0.0 {
            return Err(GeometryError::DegeneratePlane);
        }
        let r = right.normalize() * width;
        let u = up.normalize() * height;
        let ll = center - r / 2.0 - u / 2.0;
        Self::new(ll, ll + r, ll + u)
    }

    pub fn lower_left(&self) -> Point {
        self.lower_left
    }

    pub fn lower_right(&self) -> Point {
        self.lower_right
    }

    pub fn upper_left(&self) -> Point {
        self.upper_left
    }

    pub fn upper_right(&self) -> Point {
        self.lower_right + (self.upper_left - self.lower_left)
    }

    pub fn corners(&self) -> [Point; 4] {
        [self.lower_left, self.lower_right, self.upper_right(), self.upper_left]
    }

    pub fn width(&self) -> f64 {
        (self.lower_right - self.lower_left).norm()
    }

    pub fn height(&self) -> f64 {
        (self.upper_left - self.lower_left).norm()
    }

    pub fn right(&self) -> Vector {
        (self.lower_right - self.lower_left).normalize()
    }

    pub fn up(&self) -> Vector {
        (self.upper_left - self.lower_left).normalize()
    }

    /// Unit normal pointing toward the viewer's side.
    pub fn normal(&self) -> Vector {
        self.up().cross(&self.right()).normalize()
    }

    pub fn center(&self) -> Point {
        self.lower_left + (self.lower_right - self.lower_left) / 2.0 + (self.upper_left - self.lower_left) / 2.0
    }

    /// Signed distance of `p` from the plane, positive on the viewer's side.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        (p - self.lower_left).dot(&self.normal())
    }

    /// Point at screen coordinates `(u, v)` meters from the lower-left corner.
    pub fn point_at(&self, u: f64, v: f64) -> Point {
        self.lower_left + self.right() * u + self.up() * v
    }

    pub fn translated(&self, offset: Vector) -> Self {
        Self {
            lower_left: self.lower_left + offset,
            lower_right: self.lower_right + offset,
            upper_left: self.upper_left + offset,
        }
    }

    /// The same rectangle as seen from its other side: left and right swap.
    pub fn flipped(&self) -> Self {
        Self {
            lower_left: self.lower_right,
            lower_right: self.lower_left,
            upper_left: self.upper_right(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_area() {
        let p = Point::origin();
        assert_eq!(
            DisplayPlane::new(p, p, Point::new(0.0, 1.0, 0.0)),
            Err(GeometryError::DegeneratePlane)
        );
    }

    #[test]
    fn rejects_skewed_corners() {
        let r = DisplayPlane::new(Point::origin(), Point::new(1.0, 0.0, 0.0), Point::new(0.01, 1.0, 0.0));
        assert!(matches!(r, Err(GeometryError::NonOrthogonalPlane(_))));
    }

    #[test]
    fn flipped_plane_faces_the_other_way() {
        let p = DisplayPlane::from_center(Point::origin(), Vector::x(), Vector::y(), 2.0, 1.0).unwrap();
        let f = p.flipped();
        assert!((p.normal() + f.normal()).norm() < 1e-12);
        assert!((p.center() - f.center()).norm() < 1e-12);
        assert!((f.width() - 2.0).abs() < 1e-12);
    }
}
