use serde::{Deserialize, Serialize};

use super::PuzzleSpec;
use crate::board::{Cell, CubeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskAction {
    Select(CubeId),
    Drop(CubeId, Cell),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Judgement {
    Correct,
    WrongSelect,
    WrongPlace,
    /// The last cube landed on its target; the view fades to black.
    Complete,
}

/// Judges one assembler action against the puzzle with `progress` steps done.
///
/// Putting a cube that is not the next one back where it belongs counts as
/// `Correct`; it undoes a wrong pick rather than making a new placement.
pub fn judge_event(p: &PuzzleSpec, progress: usize, action: TaskAction) -> Judgement {
    let Some(next) = p.solution.get(progress) else {
        return Judgement::Correct;
    };
    match action {
        TaskAction::Select(cube) if cube == next.cube => Judgement::Correct,
        TaskAction::Select(_) => Judgement::WrongSelect,
        TaskAction::Drop(cube, cell) if cube == next.cube => {
            if cell != next.target {
                Judgement::WrongPlace
            } else if progress + 1 == p.solution.len() {
                Judgement::Complete
            } else {
                Judgement::Correct
            }
        }
        TaskAction::Drop(cube, cell) => {
            if p.expected_cell(cube, progress) == Some(cell) {
                Judgement::Correct
            } else {
                Judgement::WrongPlace
            }
        }
    }
}

/// Running judge for one task: keeps the step index and wrong-event counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTracker {
    pub progress: usize,
    pub wrong_selections: u32,
    pub wrong_placements: u32,
    pub complete: bool,
}

impl TaskTracker {
    pub fn new() -> Self {
        Self { progress: 0, wrong_selections: 0, wrong_placements: 0, complete: false }
    }

    pub fn apply(&mut self, p: &PuzzleSpec, action: TaskAction) -> Judgement {
        if self.complete {
            return Judgement::Correct;
        }
        let j = judge_event(p, self.progress, action);
        match j {
            Judgement::WrongSelect => self.wrong_selections += 1,
            Judgement::WrongPlace => self.wrong_placements += 1,
            Judgement::Complete => {
                self.progress += 1;
                self.complete = true;
            }
            Judgement::Correct => {
                if let TaskAction::Drop(cube, cell) = action {
                    let next = p.solution[self.progress];
                    if cube == next.cube && cell == next.target {
                        self.progress += 1;
                    }
                }
            }
        }
        j
    }
}

impl Default for TaskTracker {
    fn default() -> Self {
        Self::new()
    }
}
