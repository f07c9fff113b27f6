//! Prints the channel-consistency matrix for all eight condition triples,
//! then an ambiguity check for a pointing ray aimed between two cubes.
//!
//! cargo run --example analyze_conditions [-- --json]

use negspace::Role;
use negspace::awareness::{DEFAULT_AMBIGUITY_THRESHOLD, ambiguity_report, design_space_matrix};
use negspace::board::{BoardSpec, BoardState, Cell};
use negspace::geometry::{Stance, WorkspaceVolume, aim_orientation};

fn main() {
    let volume = WorkspaceVolume::standard();
    let board = BoardSpec::standard(&volume);
    let matrix = design_space_matrix(&volume, &board);

    if std::env::args().any(|a| a == "--json") {
        println!("{}", matrix.to_json());
        return;
    }
    print!("{matrix}");

    let state = BoardState::with_cells(board, &[Cell::new(3, 2), Cell::new(4, 2), Cell::new(0, 0)]).unwrap();
    let stance = Stance::default();
    let hand = stance.hand(Role::Instructor, &volume);
    let between = nalgebra::center(&board.cube_center(Cell::new(3, 2)), &board.cube_center(Cell::new(4, 2)));
    let eye = stance.eye(Role::Assembler, &volume);
    let report = ambiguity_report(&eye, &hand, aim_orientation(&hand, &between), &state, DEFAULT_AMBIGUITY_THRESHOLD).unwrap();
    println!();
    for c in &report.candidates {
        println!("cube {}  {:.4} rad", c.cube, c.angle);
    }
    println!("ambiguous: {}", report.ambiguous);
}
