//! Off-axis projection through each participant's display as the head moves
//! sideways. The screen corners stay pinned to the NDC rectangle while a cube
//! behind the glass slides across it (motion parallax).
//!
//! cargo run --example head_coupled_projection

use negspace::Role;
use negspace::board::{BoardSpec, Cell};
use negspace::geometry::{Stance, WorkspaceVolume, cursor_on_screen, project_point, projection_matrix};

fn main() {
    let volume = WorkspaceVolume::standard();
    let board = BoardSpec::standard(&volume);
    let stance = Stance::default();
    let cube = board.cube_center(Cell::new(2, 1));

    for role in [Role::Instructor, Role::Assembler] {
        let screen = volume.screen(role);
        println!("{role:?} display, normal {:?}", screen.normal().as_slice());
        for dx in [-0.3, 0.0, 0.3] {
            let mut eye = stance.eye(role, &volume);
            eye.x += dx;
            let m = projection_matrix(&eye, &screen, 0.05, 10.0).expect("eye is in front of the display");
            let corner_err = screen
                .corners()
                .iter()
                .zip([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])
                .map(|(c, (x, y))| {
                    let p = project_point(&m, c);
                    (p.x - x).abs().max((p.y - y).abs())
                })
                .fold(0.0, f64::max);
            let p = project_point(&m, &cube);
            let cursor = cursor_on_screen(&eye, &cube, &screen).expect("cube is visible");
            println!(
                "  head x {dx:+.1}: cube at NDC ({:+.3}, {:+.3}), cursor uv ({:.3}, {:.3}), corner error {corner_err:.1e}",
                p.x, p.y, cursor.u, cursor.v
            );
        }
    }
}
