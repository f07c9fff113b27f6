use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MetricsRow;
use crate::geometry::ConditionName;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("no rows for condition {0}")]
    EmptyGroup(String),
}

/// Quantile by linear interpolation between order statistics
/// (position `(n - 1)·q` in the sorted sample).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and inter-quartile range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianIqr {
    pub median: f64,
    pub iqr: f64,
}

impl MedianIqr {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self { median: quantile(&v, 0.5), iqr: quantile(&v, 0.75) - quantile(&v, 0.25) })
    }
}

impl fmt::Display for MedianIqr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", short(self.median), short(self.iqr))
    }
}

fn short(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub n: usize,
    pub completion_time: MedianIqr,
    pub wrong_selections: MedianIqr,
    pub wrong_placements: MedianIqr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<ConditionSummary>,
}

/// Per-condition medians and IQRs for the listed conditions, in that order.
pub fn summarize(rows: &[MetricsRow], conditions: &[String]) -> Result<SummaryTable, StatsError> {
    let mut out = Vec::with_capacity(conditions.len());
    for cond in conditions {
        let group: Vec<&MetricsRow> = rows.iter().filter(|r| &r.condition == cond).collect();
        let stat = |f: &dyn Fn(&MetricsRow) -> f64| {
            MedianIqr::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>()).ok_or_else(|| StatsError::EmptyGroup(cond.clone()))
        };
        out.push(ConditionSummary {
            condition: cond.clone(),
            n: group.len(),
            completion_time: stat(&|r| r.completion_time)?,
            wrong_selections: stat(&|r| r.wrong_selections as f64)?,
            wrong_placements: stat(&|r| r.wrong_placements as f64)?,
        });
    }
    Ok(SummaryTable { rows: out })
}

/// Summarizes every condition present, named conditions first in RL, SS, MP, MW order.
pub fn summarize_all(rows: &[MetricsRow]) -> SummaryTable {
    let mut order: BTreeMap<(usize, String), ()> = BTreeMap::new();
    for r in rows {
        let rank = ConditionName::ALL.iter().position(|n| n.as_str() == r.condition).unwrap_or(ConditionName::ALL.len());
        order.insert((rank, r.condition.clone()), ());
    }
    let conditions: Vec<String> = order.into_keys().map(|(_, c)| c).collect();
    summarize(rows, &conditions).expect("every listed condition has rows")
}

impl fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = ["Condition", "n", "Completion Time (s)", "Wrong Selections", "Wrong Placements"];
        let body: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.condition.clone(),
                    r.n.to_string(),
                    r.completion_time.to_string(),
                    r.wrong_selections.to_string(),
                    r.wrong_placements.to_string(),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |f: &mut fmt::Formatter<'_>, cells: &[&str]| -> fmt::Result {
            let parts: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
            writeln!(f, "{}", parts.join("  ").trim_end())
        };
        line(f, &header)?;
        for row in &body {
            line(f, &row.iter().map(String::as_str).collect::<Vec<_>>())?;
        }
        writeln!(f, "(Median, Inter-quartile Range)")
    }
}
