use serde::{Deserialize, Serialize};

use super::{DisplayPlane, GEOMETRIC_EPS, GeometryError, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CursorHit {
    /// Meters from the lower-left corner along the screen's right edge.
    pub u: f64,
    /// Meters from the lower-left corner along the screen's up edge.
    pub v: f64,
    pub point: Point,
    /// False when the cursor lands outside the physical screen rectangle.
    pub in_bounds: bool,
}

/// Places the screen cursor where the line from the head to `target`
/// crosses the screen, so that it overlays the target from the head's view.
pub fn cursor_on_screen(head: &Point, target: &Point, screen: &DisplayPlane) -> Result<CursorHit, GeometryError> {
    let n = screen.normal();
    let dir = target - head;
    let denom = dir.dot(&n);
    if denom.abs() < GEOMETRIC_EPS * dir.norm().max(1.0) {
        return Err(GeometryError::ParallelLine);
    }
    let t = (screen.lower_left() - head).dot(&n) / denom;
    let point = head + dir * t;
    let rel = point - screen.lower_left();
    let u = rel.dot(&screen.right());
    let v = rel.dot(&screen.up());
    let in_bounds = (-GEOMETRIC_EPS..=screen.width() + GEOMETRIC_EPS).contains(&u)
        && (-GEOMETRIC_EPS..=screen.height() + GEOMETRIC_EPS).contains(&v);
    Ok(CursorHit { u, v, point, in_bounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Role;
    use crate::geometry::WorkspaceVolume;

    #[test]
    fn on_axis_head_lands_at_screen_centre() {
        let v = WorkspaceVolume::standard();
        let s = v.screen(Role::Assembler);
        let c = cursor_on_screen(&Point::new(0.0, 0.0, 1.25), &Point::origin(), &s).unwrap();
        assert!((c.u - s.width() / 2.0).abs() < 1e-9 && (c.v - s.height() / 2.0).abs() < 1e-9);
        assert!(c.in_bounds);
    }

    #[test]
    fn parallel_line_is_rejected() {
        let v = WorkspaceVolume::standard();
        let s = v.screen(Role::Assembler);
        let r = cursor_on_screen(&Point::new(0.0, 0.0, 1.25), &Point::new(0.4, 0.1, 1.25), &s);
        assert_eq!(r, Err(GeometryError::ParallelLine));
    }

    #[test]
    fn far_off_target_is_flagged() {
        let v = WorkspaceVolume::standard();
        let s = v.screen(Role::Assembler);
        let c = cursor_on_screen(&Point::new(0.0, 0.0, 1.25), &Point::new(5.0, 0.0, 0.0), &s).unwrap();
        assert!(!c.in_bounds);
    }
}
