//! Puzzles, step judging, session event logs and descriptive statistics.

mod judge;
mod log;
mod puzzle;
mod stats;

pub use judge::{Judgement, TaskAction, TaskTracker, judge_event};
pub use log::{EventKind, EventLog, LogError, MetricsRow, SessionEvent, parse_jsonl, read_jsonl, score_log, split_tasks};
pub use puzzle::{
    Certificate, CubeCell, MOVABLE, PuzzleError, PuzzleSpec, Rule, RuleCheck, RuleSet, Step, TRAINING_SEED, ValidationReport,
    generate_puzzle, validate_puzzle,
};
pub use stats::{ConditionSummary, MedianIqr, StatsError, SummaryTable, quantile, summarize, summarize_all};
