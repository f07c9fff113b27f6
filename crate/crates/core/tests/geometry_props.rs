use negspace::geometry::*;
use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;

fn arb_point(r: f64) -> impl Strategy<Value = Point> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Point::new(x, y, z))
}

fn arb_unit() -> impl Strategy<Value = Vector> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-zero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
        .prop_map(|(x, y, z)| Vector::new(x, y, z).normalize())
}

/// A screen of random size, position and orientation.
fn arb_screen() -> impl Strategy<Value = DisplayPlane> {
    (arb_point(2.0), arb_unit(), -3.2..3.2f64, 0.1..2.0f64, 0.1..2.0f64).prop_map(|(c, axis, angle, w, h)| {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        DisplayPlane::from_center(c, rot * Vector::x(), rot * Vector::y(), w, h).unwrap()
    })
}

/// Exit distance of a ray through one face-plane pair, computed face by face.
fn face_oracle(b: &Aabb, o: &Point, d: &Vector) -> Option<f64> {
    if b.contains(o) {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    for axis in 0..3 {
        if d[axis] == 0.0 {
            continue;
        }
        for plane in [b.min[axis], b.max[axis]] {
            let t = (plane - o[axis]) / d[axis];
            if t < 0.0 {
                continue;
            }
            let p = o + d * t;
            let inside = (0..3).filter(|&k| k != axis).all(|k| p[k] >= b.min[k] - 1e-12 && p[k] <= b.max[k] + 1e-12);
            if inside && best.is_none_or(|bt| t < bt) {
                best = Some(t);
            }
        }
    }
    best
}

fn conditions() -> impl Strategy<Value = ConditionSpec> {
    (0u8..8).prop_map(|c| ConditionSpec::from_code(c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn screen_corners_land_on_the_ndc_boundary(screen in arb_screen(), dist in 0.05..3.0f64, u in -1.0..2.0f64, v in -1.0..2.0f64) {
        let eye = screen.point_at(u, v) + screen.normal() * dist;
        let m = projection_matrix(&eye, &screen, 0.01, 50.0).unwrap();
        let expected = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        for (c, (ex, ey)) in screen.corners().iter().zip(expected) {
            let p = project_point(&m, c);
            prop_assert!((p.x - ex).abs() < 1e-6 && (p.y - ey).abs() < 1e-6, "corner {c:?} -> {p:?}");
        }
    }

    #[test]
    fn eyes_in_the_screen_plane_are_rejected(screen in arb_screen(), u in -1.0..2.0f64, v in -1.0..2.0f64, tiny in -5e-7..5e-7f64) {
        let eye = screen.point_at(u, v) + screen.normal() * tiny;
        prop_assert!(matches!(projection_matrix(&eye, &screen, 0.01, 50.0), Err(GeometryError::EyeInScreenPlane(_))));
    }

    #[test]
    fn glue_maps_are_rigid(cond in conditions(), p in arb_point(3.0), q in arb_point(3.0)) {
        for entity in [Entity::Workspace, Entity::Embodiment] {
            let m = glue_transform(cond, entity);
            prop_assert!((m.determinant().abs() - 1.0).abs() < 1e-12);
            let d = (m.apply_point(&p) - m.apply_point(&q)).norm();
            prop_assert!((d - (p - q).norm()).abs() < 1e-9);
            let ortho = m.linear() * m.linear().transpose();
            prop_assert!((ortho - nalgebra::Matrix3::identity()).norm() < 1e-12);
        }
    }

    #[test]
    fn mirror_flags_are_involutive(p in arb_point(3.0)) {
        let m = RigidMap::mirror_x();
        prop_assert!((m.apply_point(&m.apply_point(&p)) - p).norm() < 1e-12);
        prop_assert!((m.determinant() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn resolve_ray_agrees_with_face_tests(
        boxes in prop::collection::vec((arb_point(1.0), 0.02..0.4f64), 0..=16),
        hand in arb_point(2.0),
        dir in arb_unit(),
    ) {
        let scene: Vec<Aabb> = boxes.iter().map(|(c, e)| Aabb::cube(*c, *e)).collect();
        let orientation = aim_orientation(&hand, &(hand + dir));
        let got = resolve_ray(&hand, orientation, &scene).unwrap();
        let mut want: Option<(usize, f64)> = None;
        for (i, b) in scene.iter().enumerate() {
            if let Some(t) = face_oracle(b, &hand, &dir)
                && want.is_none_or(|(_, bt)| t < bt) { want = Some((i, t)); }
        }
        match (got, want) {
            (None, None) => {}
            (Some(h), Some((i, t))) => {
                prop_assert_eq!(h.index, i);
                prop_assert!((h.distance - t).abs() < 1e-9);
            }
            (g, w) => prop_assert!(false, "resolve_ray {g:?} vs oracle {w:?}"),
        }
    }

    /// The cursor sits where the head-to-target line crosses the screen, so
    /// head, cursor and target are collinear.
    #[test]
    fn cursor_overlays_its_target(screen in arb_screen(), dist in 0.2..2.0f64, depth in 0.05..1.0f64, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let head = screen.center() + screen.normal() * dist;
        let target = screen.point_at(u, v) - screen.normal() * depth;
        let hit = cursor_on_screen(&head, &target, &screen).unwrap();
        let a = (hit.point - head).normalize();
        let b = (target - head).normalize();
        prop_assert!(a.cross(&b).norm() < 1e-9);
        prop_assert!(screen.signed_distance(&hit.point).abs() < 1e-9);
    }
}
