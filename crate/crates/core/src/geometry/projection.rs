use nalgebra::{Matrix4, Vector4};

use super::{DisplayPlane, GEOMETRIC_EPS, GeometryError, Point};

/// Head-coupled off-axis projection for a viewer at `eye` looking through `screen`.
///
/// The frustum's image rectangle is exactly the physical screen, so points
/// lying on the screen stay put on the image as the head moves while
/// everything behind it shifts with parallax. Output follows the OpenGL
/// clip-space convention (NDC depth in [-1, 1]).
pub fn projection_matrix(eye: &Point, screen: &DisplayPlane, near: f64, far: f64) -> Result<Matrix4<f64>, GeometryError> {
    if !(near > 0.0 && far > near && far.is_finite()) {
        return Err(GeometryError::BadClipRange { near, far });
    }
    let vr = screen.right();
    let vu = screen.up();
    let vn = screen.normal();

    let va = screen.lower_left() - eye;
    let vb = screen.lower_right() - eye;
    let vc = screen.upper_left() - eye;

    let dist = -va.dot(&vn);
    if dist.abs() < GEOMETRIC_EPS {
        return Err(GeometryError::EyeInScreenPlane(dist));
    }
    if dist < 0.0 {
        return Err(GeometryError::EyeBehindScreen(dist));
    }

    let scale = near / dist;
    let l = vr.dot(&va) * scale;
    let r = vr.dot(&vb) * scale;
    let b = vu.dot(&va) * scale;
    let t = vu.dot(&vc) * scale;

    let frustum = Matrix4::new(
        2.0 * near / (r - l), 0.0, (r + l) / (r - l), 0.0,
        0.0, 2.0 * near / (t - b), (t + b) / (t - b), 0.0,
        0.0, 0.0, -(far + near) / (far - near), -2.0 * far * near / (far - near),
        0.0, 0.0, -1.0, 0.0,
    );
    let to_screen = Matrix4::new(
        vr.x, vr.y, vr.z, 0.0,
        vu.x, vu.y, vu.z, 0.0,
        vn.x, vn.y, vn.z, 0.0,
        0.0, 0.0, 0.0, 1.0,
    );
    let to_eye = Matrix4::new_translation(&(-eye.coords));
    Ok(frustum * to_screen * to_eye)
}

/// Applies `m` to `p` and performs the perspective divide.
pub fn project_point(m: &Matrix4<f64>, p: &Point) -> Point {
    let clip = m * Vector4::new(p.x, p.y, p.z, 1.0);
    Point::new(clip.x / clip.w, clip.y / clip.w, clip.z / clip.w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Vector, WorkspaceVolume};
    use crate::Role;

    fn corners_ndc(m: &Matrix4<f64>, s: &DisplayPlane) -> Vec<Point> {
        s.corners().iter().map(|c| project_point(m, c)).collect()
    }

    #[test]
    fn centred_eye_gives_symmetric_frustum() {
        let s = DisplayPlane::from_center(Point::origin(), Vector::x(), Vector::y(), 0.685, 1.218).unwrap();
        // normal is up × right = -z, so the viewer stands at negative z
        let eye = Point::new(0.0, 0.0, -1.0);
        let m = projection_matrix(&eye, &s, 0.05, 10.0).unwrap();
        assert!(m[(0, 2)].abs() < 1e-12 && m[(1, 2)].abs() < 1e-12);
        let expect = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        for (p, (x, y)) in corners_ndc(&m, &s).iter().zip(expect) {
            assert!((p.x - x).abs() < 1e-6 && (p.y - y).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn off_axis_eye_keeps_corners_on_boundary() {
        let v = WorkspaceVolume::standard();
        let s = v.screen(Role::Instructor);
        let m = projection_matrix(&Point::new(0.10, 0.20, -1.25), &s, 0.05, 10.0).unwrap();
        for p in corners_ndc(&m, &s) {
            assert!((p.x.abs() - 1.0).abs() < 1e-6 && (p.y.abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let v = WorkspaceVolume::standard();
        let s = v.screen(Role::Instructor);
        let in_plane = Point::new(0.1, 0.1, -0.25);
        assert!(matches!(projection_matrix(&in_plane, &s, 0.05, 10.0), Err(GeometryError::EyeInScreenPlane(_))));
        let behind = Point::new(0.0, 0.0, 0.5);
        assert!(matches!(projection_matrix(&behind, &s, 0.05, 10.0), Err(GeometryError::EyeBehindScreen(_))));
        let eye = Point::new(0.0, 0.0, -1.25);
        assert!(matches!(projection_matrix(&eye, &s, 0.0, 10.0), Err(GeometryError::BadClipRange { .. })));
        assert!(matches!(projection_matrix(&eye, &s, 2.0, 1.0), Err(GeometryError::BadClipRange { .. })));
    }
}
