use std::collections::BTreeSet;

use negspace::Role;
use negspace::geometry::ConditionName;
use negspace::protocol::*;

const INPUTS: [SessionInput; 5] =
    [SessionInput::Join(0), SessionInput::Join(1), SessionInput::Join(2), SessionInput::TaskComplete, SessionInput::Continue];

/// Walks every input sequence up to `depth`, cutting branches at illegal
/// transitions, and calls `visit` on each reached state with its history.
fn explore(s: &SessionState, depth: usize, path: &mut Vec<SessionInput>, visit: &mut dyn FnMut(&SessionState, &[SessionInput])) {
    visit(s, path);
    if depth == 0 {
        return;
    }
    for input in INPUTS {
        match session_step(s, input) {
            Ok(next) => {
                path.push(input);
                explore(&next, depth - 1, path, visit);
                path.pop();
            }
            Err(e) => assert_eq!(e.phase, s.phase),
        }
    }
}

#[test]
fn done_needs_eight_completions_and_one_switch() {
    let mut done_paths = 0;
    let mut states = 0;
    explore(&SessionState::new(3), 16, &mut Vec::new(), &mut |s, path| {
        states += 1;
        let completes = path.iter().filter(|&&i| i == SessionInput::TaskComplete).count();
        if s.phase == Phase::Done {
            done_paths += 1;
            assert_eq!(s.completions, 8);
            assert_eq!(completes, 9, "training plus eight tasks");
            assert_eq!(s.role_switches, 1);
            assert_eq!(s.roles, [Role::Assembler, Role::Instructor]);
            assert!(path.iter().filter(|&&i| i == SessionInput::Continue).count() == 1);
        } else {
            assert!(s.completions < 8 || s.phase == Phase::Done);
        }
    });
    // Two join orders, then one fixed route to the end.
    assert_eq!(done_paths, 2);
    assert!(states > 20);
}

#[test]
fn done_is_terminal() {
    let mut s = SessionState::new(0);
    for i in [SessionInput::Join(0), SessionInput::Join(1)] {
        s = session_step(&s, i).unwrap();
    }
    for _ in 0..5 {
        s = session_step(&s, SessionInput::TaskComplete).unwrap();
    }
    s = session_step(&s, SessionInput::Continue).unwrap();
    for _ in 0..4 {
        s = session_step(&s, SessionInput::TaskComplete).unwrap();
    }
    assert_eq!(s.phase, Phase::Done);
    for input in INPUTS {
        assert!(session_step(&s, input).is_err());
    }
}

#[test]
fn blocks_use_each_condition_once_and_puzzles_differ() {
    for pair in 0..1000 {
        let s = SessionState::new(pair);
        for block in s.condition_order {
            let set: BTreeSet<ConditionName> = block.into_iter().collect();
            assert_eq!(set.len(), 4, "pair {pair}: {block:?}");
        }
        let puzzles: BTreeSet<u32> = s.puzzles.into_iter().collect();
        assert_eq!(puzzles.len(), 8);
        assert!(!puzzles.contains(&s.training.puzzle));
    }
}

#[test]
fn first_conditions_are_balanced_over_four_pairs() {
    let mut seen = BTreeSet::new();
    for pair in 0..4 {
        seen.insert(SessionState::new(pair).condition_order[0][0]);
    }
    assert_eq!(seen.len(), 4);
}
