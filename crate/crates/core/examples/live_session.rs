//! Starts a loopback server and plays a full session between two headless
//! agents over real TCP and UDP sockets, with agent timing sped up 5x.

use std::thread;
use std::time::Duration;

use negspace::runtime::{ClientOptions, Config, ServeOptions, Server, run_client};
use negspace::tasks::score_log;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = Config::default();
    cfg.session.pose_rate_hz = 200.0;
    cfg.timing = cfg.timing.scaled(0.2);

    let server = Server::bind(ServeOptions::loopback(cfg.host_config()?))?;
    cfg.server.tcp = server.tcp_addr().to_string();
    cfg.server.udp = server.udp_addr().to_string();
    println!("serving on tcp {} / udp {}", cfg.server.tcp, cfg.server.udp);
    let running = server.spawn();

    let clients: Vec<_> = (0..2)
        .map(|seed| {
            let mut opts = ClientOptions::from_config(&cfg, seed).expect("valid config");
            opts.max_duration = Duration::from_secs(120);
            thread::spawn(move || run_client(&opts))
        })
        .collect();
    for c in clients {
        let report = c.join().expect("client thread")?;
        println!("{:?} finished tasks {:?}", report.role, report.completed);
    }

    let report = running.join()?;
    println!("server phase: {:?}", report.phase);
    for log in report.logs.iter().skip(1) {
        let row = score_log(log.events())?;
        println!("task {} {:<3} {:>6.2} s", row.task, row.condition, row.completion_time);
    }
    Ok(())
}
