//! Runs simulated sessions for a few pairs and prints per-condition medians.
//!
//! `cargo run --example simulate_study -- [pairs] [loss]`

use negspace::runtime::{NetworkModel, SimConfig, simulate_session};
use negspace::tasks::{score_log, summarize_all};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let pairs: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let loss: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.0);

    let mut rows = Vec::new();
    for pair in 0..pairs {
        let cfg = SimConfig::standard(pair, NetworkModel::lossy(loss, pair as u64), pair as u64);
        let out = simulate_session(&cfg)?;
        println!(
            "pair {pair}: {:.1} s virtual, {} datagrams ({} lost), replicas converged: {}",
            out.virtual_us as f64 / 1e6,
            out.stats.datagrams,
            out.stats.lost,
            out.converged()
        );
        for log in &out.tasks {
            rows.push(score_log(log.events())?);
        }
    }
    println!("\n{}", summarize_all(&rows));
    Ok(())
}
