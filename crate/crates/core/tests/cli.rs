mod common;

use std::path::Path;
use std::process::{Command, Output};

use negspace::tasks::{SummaryTable, read_jsonl, score_log, split_tasks};

fn negspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_negspace")).args(args).env_remove("NEGSPACE_CONFIG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_exists_on_every_level() {
    for args in [
        &["--help"][..],
        &["serve", "--help"],
        &["client", "--help"],
        &["simulate", "--help"],
        &["analyze", "--help"],
        &["puzzle", "--help"],
        &["puzzle", "gen", "--help"],
        &["puzzle", "validate", "--help"],
        &["stats", "--help"],
        &["proj", "--help"],
    ] {
        let o = negspace(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(stdout(&o).contains("Usage:"), "{args:?}");
    }
}

#[test]
fn usage_errors_exit_2_and_name_the_flag() {
    let o = negspace(&["simulate", "--loss", "lots"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--loss"));
    assert_eq!(negspace(&["puzzle"]).status.code(), Some(2));
    assert_eq!(negspace(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn analyze_prints_eight_rows_with_four_names() {
    let o = negspace(&["analyze"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(rows.len(), 8);
    for name in ["RL", "SS", "MP", "MW"] {
        assert_eq!(rows.iter().filter(|r| r.split_whitespace().next() == Some(name)).count(), 1, "{name}");
    }
    let json: serde_json::Value = serde_json::from_slice(&negspace(&["analyze", "--json"]).stdout).unwrap();
    assert!(json.is_object() || json.is_array());
}

#[test]
fn puzzle_gen_is_deterministic_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for f in [&a, &b] {
        assert_eq!(negspace(&["puzzle", "gen", "--seed", "3", "--out", f.to_str().unwrap()]).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(negspace(&["puzzle", "validate", a.to_str().unwrap()]).status.code(), Some(0));

    let mut p: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    p["initial"]["cell"]["col"] = 0.into();
    std::fs::write(&b, p.to_string()).unwrap();
    let o = negspace(&["puzzle", "validate", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    assert_eq!(negspace(&["puzzle", "validate", "/nonexistent.json"]).status.code(), Some(1));
}

fn oracle_check(table: &SummaryTable, dir: &Path) {
    let mut by_condition: std::collections::BTreeMap<String, Vec<[f64; 3]>> = Default::default();
    for entry in std::fs::read_dir(dir).unwrap() {
        let events = read_jsonl(&entry.unwrap().path()).unwrap();
        for task in split_tasks(&events).unwrap() {
            let r = score_log(task).unwrap();
            if r.task > 0 {
                by_condition.entry(r.condition).or_default().push([
                    r.completion_time,
                    r.wrong_selections as f64,
                    r.wrong_placements as f64,
                ]);
            }
        }
    }
    assert_eq!(table.rows.len(), by_condition.len());
    for row in &table.rows {
        let values = &by_condition[&row.condition];
        assert_eq!(row.n, values.len());
        let stats = [row.completion_time, row.wrong_selections, row.wrong_placements];
        for (k, s) in stats.iter().enumerate() {
            let col: Vec<f64> = values.iter().map(|v| v[k]).collect();
            let median = common::oracle_quantile(&col, 0.5);
            let iqr = common::oracle_quantile(&col, 0.75) - common::oracle_quantile(&col, 0.25);
            assert!((s.median - median).abs() < 1e-9 && (s.iqr - iqr).abs() < 1e-9, "{} column {k}", row.condition);
        }
    }
}

#[test]
fn simulate_then_stats_matches_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    let o = negspace(&["simulate", "--pairs", "3", "--seed", "7", "--out", logs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let mut files: Vec<String> =
        std::fs::read_dir(&logs).unwrap().map(|e| e.unwrap().path().to_str().unwrap().to_string()).collect();
    files.sort();
    assert_eq!(files.len(), 27);
    let mut args = vec!["stats", "--json"];
    args.extend(files.iter().map(String::as_str));
    let o = negspace(&args);
    assert_eq!(o.status.code(), Some(0));
    let table: SummaryTable = serde_json::from_slice(&o.stdout).unwrap();
    oracle_check(&table, &logs);

    // The text table carries the same numbers.
    args.remove(1);
    let text = stdout(&negspace(&args));
    assert!(text.starts_with("Condition"));
    assert_eq!(text.lines().filter(|l| ["RL", "SS", "MP", "MW"].iter().any(|c| l.starts_with(c))).count(), 4);
}

#[test]
fn simulate_is_reproducible_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = negspace(&["simulate", "--seed", "4", "--loss", "0.3", "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
    }
}

#[test]
fn stats_rejects_malformed_logs() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.jsonl");
    std::fs::write(&f, "{\"t\":0.0,\"wall\":\"x\",\"kind\":\"Fade\"}\n").unwrap();
    assert_eq!(negspace(&["stats", f.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn config_file_and_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[network]\nloss = 3.0\n").unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, "[board]\ncolumns = 6\n").unwrap();

    assert_eq!(negspace(&["analyze", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    let o = negspace(&["puzzle", "gen", "--seed", "1", "--config", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"columns\": 6"));

    let o = Command::new(env!("CARGO_BIN_EXE_negspace"))
        .args(["puzzle", "gen", "--seed", "1", "--config", good.to_str().unwrap()])
        .env("NEGSPACE_CONFIG", &bad)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "the environment variable wins");
}

#[test]
fn proj_checks_corners_and_rejects_a_flat_eye() {
    let o = negspace(&["proj", "--eye", "0.2,0.1,-1.0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("corner check: ok"));
    let o = negspace(&["proj", "--eye", "0.2,0.1,-1.0", "--screen", "-1,-1,0;1,-1,0;-1,1,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(negspace(&["proj", "--eye", "0.3,0.3,0", "--screen", "-1,-1,0;1,-1,0;-1,1,0"]).status.code(), Some(1));
    assert_eq!(negspace(&["proj", "--screen", "0,0,0;1,0,0"]).status.code(), Some(2));
}
