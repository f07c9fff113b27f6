use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Role;
use crate::geometry::ConditionName;

pub const TASKS_PER_BLOCK: u8 = 4;
pub const TASK_COUNT: u8 = 8;

/// Balanced 4x4 Latin square over `ConditionName::ALL`: every condition
/// appears once per row and column, and every ordered pair of conditions
/// is adjacent exactly once across the rows.
pub const LATIN_SQUARE: [[usize; 4]; 4] = [[0, 1, 3, 2], [1, 2, 0, 3], [2, 3, 1, 0], [3, 0, 2, 1]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Lobby,
    Training,
    Task(u8),
    RoleSwitch,
    Done,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Task(i) => write!(f, "Task{i}"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionInput {
    Join(u8),
    TaskComplete,
    /// Both participants are ready after swapping roles.
    Continue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{input:?} is not allowed in phase {phase}")]
pub struct IllegalTransition {
    pub phase: Phase,
    pub input: SessionInput,
}

/// What the current phase asks the participants to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPlan {
    /// 0 for training.
    pub task: u8,
    pub condition: ConditionName,
    pub puzzle: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub phase: Phase,
    pub pair_id: u32,
    pub joined: [bool; 2],
    /// Role of participant 0 and 1.
    pub roles: [Role; 2],
    pub condition_order: [[ConditionName; 4]; 2],
    pub puzzles: [u32; 8],
    pub training: TaskPlan,
    pub role_switches: u8,
    pub completions: u8,
}

impl SessionState {
    pub fn new(pair_id: u32) -> Self {
        Self::with_training(pair_id, TaskPlan { task: 0, condition: ConditionName::SS, puzzle: 0 })
    }

    pub fn with_training(pair_id: u32, training: TaskPlan) -> Self {
        let block = |b: u32| LATIN_SQUARE[((pair_id + b) % 4) as usize].map(|i| ConditionName::ALL[i]);
        Self {
            phase: Phase::Lobby,
            pair_id,
            joined: [false; 2],
            roles: [Role::Instructor, Role::Assembler],
            condition_order: [block(0), block(1)],
            puzzles: std::array::from_fn(|i| 1 + ((i as u32 + pair_id) % 8)),
            training,
            role_switches: 0,
            completions: 0,
        }
    }

    pub fn participant(&self, role: Role) -> u8 {
        if self.roles[0] == role { 0 } else { 1 }
    }

    pub fn plan(&self) -> Option<TaskPlan> {
        match self.phase {
            Phase::Training => Some(self.training),
            Phase::Task(i) => {
                let idx = (i - 1) as usize;
                Some(TaskPlan { task: i, condition: self.condition_order[idx / 4][idx % 4], puzzle: self.puzzles[idx] })
            }
            _ => None,
        }
    }
}

pub fn session_step(state: &SessionState, input: SessionInput) -> Result<SessionState, IllegalTransition> {
    let illegal = IllegalTransition { phase: state.phase, input };
    let mut s = state.clone();
    match (state.phase, input) {
        (Phase::Lobby, SessionInput::Join(p)) if p < 2 && !state.joined[p as usize] => {
            s.joined[p as usize] = true;
            if s.joined == [true, true] {
                s.phase = Phase::Training;
            }
        }
        (Phase::Training, SessionInput::TaskComplete) => s.phase = Phase::Task(1),
        (Phase::Task(i), SessionInput::TaskComplete) => {
            s.completions += 1;
            s.phase = if i == TASKS_PER_BLOCK {
                s.roles = [s.roles[1], s.roles[0]];
                s.role_switches += 1;
                Phase::RoleSwitch
            } else if i == TASK_COUNT {
                Phase::Done
            } else {
                Phase::Task(i + 1)
            };
        }
        (Phase::RoleSwitch, SessionInput::Continue) => s.phase = Phase::Task(TASKS_PER_BLOCK + 1),
        _ => return Err(illegal),
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(inputs: &[SessionInput]) -> SessionState {
        inputs.iter().fold(SessionState::new(0), |s, &i| session_step(&s, i).unwrap())
    }

    #[test]
    fn both_joins_start_training() {
        let s = run(&[SessionInput::Join(1)]);
        assert_eq!(s.phase, Phase::Lobby);
        assert_eq!(run(&[SessionInput::Join(1), SessionInput::Join(0)]).phase, Phase::Training);
    }

    #[test]
    fn fourth_completion_switches_roles() {
        let mut inputs = vec![SessionInput::Join(0), SessionInput::Join(1)];
        inputs.extend([SessionInput::TaskComplete; 5]);
        let s = run(&inputs);
        assert_eq!(s.phase, Phase::RoleSwitch);
        assert_eq!(s.roles, [Role::Assembler, Role::Instructor]);
    }

    #[test]
    fn join_mid_task_is_illegal() {
        let s = run(&[SessionInput::Join(0), SessionInput::Join(1), SessionInput::TaskComplete, SessionInput::TaskComplete]);
        assert_eq!(s.phase, Phase::Task(2));
        assert_eq!(
            session_step(&s, SessionInput::Join(0)),
            Err(IllegalTransition { phase: Phase::Task(2), input: SessionInput::Join(0) })
        );
    }

    #[test]
    fn latin_square_is_balanced() {
        let mut pairs = std::collections::BTreeSet::new();
        for row in LATIN_SQUARE {
            for w in row.windows(2) {
                assert!(pairs.insert((w[0], w[1])));
            }
        }
        for col in 0..4 {
            let mut seen: Vec<usize> = LATIN_SQUARE.iter().map(|r| r[col]).collect();
            seen.sort();
            assert_eq!(seen, [0, 1, 2, 3]);
        }
    }
}
