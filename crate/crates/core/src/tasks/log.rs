use std::io::{BufRead, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::board::{Cell, CubeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    TaskStart { task: u8, condition: String, puzzle: u32 },
    Select { cube: CubeId },
    Pick { cube: CubeId },
    Drop { cube: CubeId, cell: Cell },
    WrongSelect { cube: CubeId },
    WrongPlace { cube: CubeId, cell: Cell },
    /// The assembler clicked again after a click had no visible effect.
    ClickRetry,
    Fade,
    TaskComplete,
}

/// One timestamped line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    /// Monotonic seconds since the session clock started.
    pub t: f64,
    /// Wall-clock time, ISO-8601.
    pub wall: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Append-only event log with a wall-clock anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    epoch: DateTime<Utc>,
    events: Vec<SessionEvent>,
}

impl EventLog {
    pub fn new(epoch: DateTime<Utc>) -> Self {
        Self { epoch, events: Vec::new() }
    }

    pub fn from_events(events: Vec<SessionEvent>) -> Self {
        Self { epoch: DateTime::UNIX_EPOCH, events }
    }

    /// Appends an event; timestamps are clamped so they never go backwards.
    pub fn push(&mut self, t: f64, kind: EventKind) {
        let t = self.events.last().map_or(t, |e| t.max(e.t));
        let wall = self.epoch + TimeDelta::microseconds((t * 1e6).round() as i64);
        self.events.push(SessionEvent { t, wall: wall.to_rfc3339_opts(SecondsFormat::Micros, true), kind });
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<SessionEvent> {
        self.events
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), LogError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_jsonl().as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

pub fn parse_jsonl(reader: impl BufRead) -> Result<Vec<SessionEvent>, LogError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| LogError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<SessionEvent>, LogError> {
    let f = std::fs::File::open(path)?;
    parse_jsonl(std::io::BufReader::new(f))
}

/// Splits a session log into per-task slices, each `TaskStart ..= TaskComplete`.
/// Events outside any task are ignored; an unterminated task is an error.
pub fn split_tasks(events: &[SessionEvent]) -> Result<Vec<&[SessionEvent]>, LogError> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, e) in events.iter().enumerate() {
        match e.kind {
            EventKind::TaskStart { .. } => {
                if start.is_some() {
                    return Err(LogError::MalformedLog(format!("TaskStart at line {} before previous TaskComplete", i + 1)));
                }
                start = Some(i);
            }
            EventKind::TaskComplete => {
                let s = start
                    .take()
                    .ok_or_else(|| LogError::MalformedLog(format!("TaskComplete at line {} without TaskStart", i + 1)))?;
                out.push(&events[s..=i]);
            }
            _ => {}
        }
    }
    if start.is_some() {
        return Err(LogError::MalformedLog("log ends inside a task (no TaskComplete)".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub condition: String,
    pub task: u8,
    pub completion_time: f64,
    pub wrong_selections: u32,
    pub wrong_placements: u32,
}

/// Scores one task log: elapsed time and wrong-event counts.
pub fn score_log(events: &[SessionEvent]) -> Result<MetricsRow, LogError> {
    let first = events.first().ok_or_else(|| LogError::MalformedLog("empty log".into()))?;
    let EventKind::TaskStart { task, condition, .. } = &first.kind else {
        return Err(LogError::MalformedLog("log does not start with TaskStart".into()));
    };
    let last = events.last().expect("non-empty");
    if last.kind != EventKind::TaskComplete {
        return Err(LogError::MalformedLog("log does not end with TaskComplete".into()));
    }
    let mut prev = first.t;
    let mut completes = 0;
    let (mut wrong_selections, mut wrong_placements) = (0, 0);
    for e in events {
        if e.t < prev {
            return Err(LogError::MalformedLog(format!("timestamp {} goes backwards", e.t)));
        }
        prev = e.t;
        match e.kind {
            EventKind::WrongSelect { .. } => wrong_selections += 1,
            EventKind::WrongPlace { .. } => wrong_placements += 1,
            EventKind::TaskComplete => completes += 1,
            EventKind::TaskStart { .. } if !std::ptr::eq(e, first) => {
                return Err(LogError::MalformedLog("second TaskStart inside a task".into()));
            }
            _ => {}
        }
    }
    if completes != 1 {
        return Err(LogError::MalformedLog(format!("{completes} TaskComplete events")));
    }
    let completion_time = last.t - first.t;
    if !(completion_time > 0.0) {
        return Err(LogError::MalformedLog("completion time must be positive".into()));
    }
    Ok(MetricsRow { condition: condition.clone(), task: *task, completion_time, wrong_selections, wrong_placements })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: f64, kind: EventKind) -> SessionEvent {
        SessionEvent { t, wall: String::new(), kind }
    }

    fn start() -> EventKind {
        EventKind::TaskStart { task: 1, condition: "RL".into(), puzzle: 1 }
    }

    #[test]
    fn scores_time_and_counts() {
        let wp = EventKind::WrongPlace { cube: CubeId(2), cell: Cell::new(1, 1) };
        let log = vec![ev(0.0, start()), ev(10.0, wp.clone()), ev(20.0, wp), ev(92.5, EventKind::TaskComplete)];
        let row = score_log(&log).unwrap();
        assert_eq!((row.completion_time, row.wrong_selections, row.wrong_placements), (92.5, 0, 2));
        assert_eq!(row.condition, "RL");
    }

    #[test]
    fn missing_complete_is_malformed() {
        let log = vec![ev(0.0, start()), ev(3.0, EventKind::Fade)];
        assert!(matches!(score_log(&log), Err(LogError::MalformedLog(_))));
        assert!(matches!(score_log(&[]), Err(LogError::MalformedLog(_))));
        assert!(matches!(split_tasks(&log), Err(LogError::MalformedLog(_))));
    }

    #[test]
    fn jsonl_round_trip_keeps_wall_clock() {
        let epoch = DateTime::parse_from_rfc3339("2020-01-01T00:00:00Z").unwrap().to_utc();
        let mut log = EventLog::new(epoch);
        log.push(0.0, start());
        log.push(1.5, EventKind::Select { cube: CubeId(3) });
        log.push(1.0, EventKind::TaskComplete);
        let text = log.to_jsonl();
        assert!(text.lines().next().unwrap().contains("\"kind\":\"TaskStart\""));
        let back = parse_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, log.events());
        assert_eq!(back[1].wall, "2020-01-01T00:00:01.500000Z");
        // clamped, never backwards
        assert_eq!(back[2].t, 1.5);
    }
}
