//! Generates a puzzle, checks it against the rule set, then plays it through
//! the task judge with one deliberate wrong pick along the way.
//!
//! cargo run --example puzzle_task [-- SEED]

use negspace::board::{BoardSpec, CubeId};
use negspace::geometry::WorkspaceVolume;
use negspace::tasks::{RuleSet, TaskAction, TaskTracker, generate_puzzle, validate_puzzle};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let board = BoardSpec::standard(&WorkspaceVolume::standard());
    let rules = RuleSet::default();
    let puzzle = generate_puzzle(seed, &board, &rules).expect("default rules fit the standard board");

    println!("seed {seed}: cube {} fixed at {}", puzzle.initial.cube, puzzle.initial.cell);
    for s in &puzzle.starts {
        println!("  cube {} starts at {}", s.cube, s.cell);
    }
    for check in validate_puzzle(&puzzle, &rules).checks {
        println!("  {:<16} {}", format!("{:?}", check.rule), if check.passed { "ok" } else { "FAIL" });
    }
    println!("certificate {:?}", puzzle.complexity);

    let mut tracker = TaskTracker::new();
    let wrong = puzzle.solution.iter().map(|s| s.cube).find(|&c| c != puzzle.solution[0].cube).unwrap_or(CubeId(1));
    println!("select {wrong}: {:?}", tracker.apply(&puzzle, TaskAction::Select(wrong)));
    for step in &puzzle.solution {
        let a = tracker.apply(&puzzle, TaskAction::Select(step.cube));
        let b = tracker.apply(&puzzle, TaskAction::Drop(step.cube, step.target));
        println!("move {} to {}: {a:?}, {b:?}", step.cube, step.target);
    }
    println!(
        "complete {}, wrong selections {}, wrong placements {}",
        tracker.complete, tracker.wrong_selections, tracker.wrong_placements
    );
}
