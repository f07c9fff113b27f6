//! The instructor points at a few cells; for each named condition this shows
//! which cell the assembler sees the rendered ray land on.
//!
//! cargo run --example pointing_across_conditions

use negspace::awareness::perceived_cell;
use negspace::board::{BoardSpec, Cell};
use negspace::geometry::{ConditionName, Stance, WorkspaceVolume};

fn main() {
    let volume = WorkspaceVolume::standard();
    let board = BoardSpec::standard(&volume);
    let stance = Stance::default();
    let targets = [Cell::new(0, 0), Cell::new(6, 1), Cell::new(2, 4), Cell::new(7, 3)];

    print!("{:<6}", "");
    for t in targets {
        print!("{:>10}", t.to_string());
    }
    println!();
    for name in [ConditionName::RL, ConditionName::SS, ConditionName::MP, ConditionName::MW] {
        print!("{:<6}", name.as_str());
        for t in targets {
            let seen = perceived_cell(name.spec(), &volume, &board, &stance, t);
            let text = match seen {
                Some(c) if c == t => format!("{c}"),
                Some(c) => format!("{c}!"),
                None => "miss".to_string(),
            };
            print!("{text:>10}");
        }
        println!();
    }
    println!("\n'!' marks a ray that lands on a different cell than the one aimed at.");
}
