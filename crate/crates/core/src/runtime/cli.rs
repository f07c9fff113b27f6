//! Command-line front end. Exit status: 0 success, 1 domain error, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{Config, ConfigError};
use super::host::write_session_logs;
use super::live::{ClientOptions, LiveError, ServeOptions, Server, run_client};
use super::sim::{SimConfig, SimError, simulate_session};
use crate::awareness::design_space_matrix;
use crate::geometry::{DisplayPlane, GEOMETRIC_EPS, GeometryError, Point, Stance, project_point, projection_matrix};
use crate::protocol::ClickMode;
use crate::tasks::{LogError, PuzzleSpec, generate_puzzle, read_jsonl, score_log, split_tasks, summarize_all, validate_puzzle};
use crate::Role;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "negspace", version, about = "Shared-volume remote collaboration: sessions, simulation and analysis")]
struct Cli {
    /// TOML configuration file (NEGSPACE_CONFIG takes precedence).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More logging; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a live session server (TCP, UDP and the WebSocket gateway).
    Serve(ServeArgs),
    /// Connect a scripted agent to a live server.
    Client(ClientArgs),
    /// Run sessions between scripted agents on a simulated network.
    Simulate(SimulateArgs),
    /// Print the reference-frame consistency matrix of all eight conditions.
    Analyze(AnalyzeArgs),
    /// Generate or validate puzzles.
    #[command(subcommand)]
    Puzzle(PuzzleCommand),
    /// Summarize task logs per condition: median and IQR of time and errors.
    Stats(StatsArgs),
    /// Debug a head-coupled projection: matrix and screen-corner NDC check.
    Proj(ProjArgs),
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, value_name = "ADDR")]
    tcp: Option<String>,
    #[arg(long, value_name = "ADDR")]
    udp: Option<String>,
    #[arg(long, value_name = "ADDR")]
    gateway: Option<String>,
    /// Do not open the WebSocket gateway.
    #[arg(long, conflicts_with = "gateway")]
    no_gateway: bool,
    #[arg(long, value_name = "N")]
    pair: Option<u32>,
    /// Write the task logs here when the session ends.
    #[arg(long, value_name = "DIR")]
    log_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClientArgs {
    /// Server TCP address.
    #[arg(long, value_name = "ADDR")]
    server: Option<String>,
    /// Server UDP address.
    #[arg(long, value_name = "ADDR")]
    server_udp: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    name: Option<String>,
    /// Disconnect after this many study tasks.
    #[arg(long, value_name = "N")]
    tasks: Option<usize>,
    /// Give up after this many seconds.
    #[arg(long, value_name = "SECS", default_value_t = 3600)]
    timeout: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClickArg {
    Faithful,
    ReliableClicks,
}

impl From<ClickArg> for ClickMode {
    fn from(c: ClickArg) -> Self {
        match c {
            ClickArg::Faithful => ClickMode::Faithful,
            ClickArg::ReliableClicks => ClickMode::ReliableClicks,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of pairs; pair ids count up from the configured one.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pairs: u32,
    /// Datagram loss probability, overriding the configuration.
    #[arg(long, value_name = "P")]
    loss: Option<f64>,
    #[arg(long, value_name = "MS")]
    latency: Option<f64>,
    #[arg(long, value_enum)]
    click_mode: Option<ClickArg>,
    /// Write one JSON-lines log per task into this directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum PuzzleCommand {
    /// Generate the puzzle for a seed as JSON.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Check a puzzle file against every rule.
    Validate { file: PathBuf },
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// JSON-lines task logs; a file may hold several tasks.
    #[arg(required = true)]
    logs: Vec<PathBuf>,
    /// Also count training tasks (task 0).
    #[arg(long)]
    include_training: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ProjArgs {
    /// Eye position x,y,z in metres; defaults to the instructor's stance.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    eye: Option<Point>,
    /// Screen as lower-left;lower-right;upper-left corners, each x,y,z.
    #[arg(long, value_parser = parse_corners, allow_hyphen_values = true)]
    screen: Option<DisplayPlane>,
    #[arg(long, default_value_t = 0.05)]
    near: f64,
    #[arg(long, default_value_t = 100.0)]
    far: f64,
}

fn parse_point(s: &str) -> Result<Point, String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Point::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

fn parse_corners(s: &str) -> Result<DisplayPlane, String> {
    let pts: Vec<Point> = s.split(';').map(parse_point).collect::<Result<_, _>>()?;
    match pts[..] {
        [ll, lr, ul] => DisplayPlane::new(ll, lr, ul).map_err(|e| e.to_string()),
        _ => Err(format!("expected three corners separated by ';', got {s:?}")),
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Live(#[from] LiveError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Failed(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.into(), source }
}

/// Runs the CLI on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if e.use_stderr() {
                let _ = e.print();
            } else {
                let _ = write!(out, "{}", e.render());
            }
            return code;
        }
    };
    init_logging(cli.verbose);
    match dispatch(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DOMAIN
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = || Config::load(cli.config.as_deref());
    let w = |out: &mut dyn Write, s: String| out.write_all(s.as_bytes()).map_err(io_err(Path::new("<stdout>")));
    match &cli.command {
        Command::Analyze(a) => {
            let cfg = config()?;
            let volume = cfg.volume()?;
            let matrix = design_space_matrix(&volume, &cfg.board_spec(&volume));
            w(out, if a.json { matrix.to_json() + "\n" } else { matrix.to_string() })
        }
        Command::Puzzle(PuzzleCommand::Gen { seed, out: file }) => {
            let cfg = config()?;
            let volume = cfg.volume()?;
            let puzzle = generate_puzzle(*seed, &cfg.board_spec(&volume), &cfg.rules).map_err(|e| CliError::Failed(e.to_string()))?;
            let json = serde_json::to_string_pretty(&puzzle).expect("puzzle serializes") + "\n";
            match file {
                Some(path) => std::fs::write(path, json).map_err(io_err(path)),
                None => w(out, json),
            }
        }
        Command::Puzzle(PuzzleCommand::Validate { file }) => {
            let cfg = config()?;
            let text = std::fs::read_to_string(file).map_err(io_err(file))?;
            let puzzle: PuzzleSpec =
                serde_json::from_str(&text).map_err(|source| CliError::Json { path: file.clone(), source })?;
            let report = validate_puzzle(&puzzle, &cfg.rules);
            let mut s = String::new();
            for c in &report.checks {
                s += &format!("{:<16} {}  {}\n", format!("{:?}", c.rule), if c.passed { "ok  " } else { "FAIL" }, c.detail);
            }
            w(out, s)?;
            if report.all_passed() { Ok(()) } else { Err(CliError::Failed(format!("{} violates the rules", file.display()))) }
        }
        Command::Stats(a) => stats(a, out),
        Command::Proj(a) => proj(a, cli, out),
        Command::Simulate(a) => simulate(a, cli, out),
        Command::Serve(a) => serve(a, cli, out),
        Command::Client(a) => {
            let cfg = config()?;
            let mut opts = ClientOptions::from_config(&cfg, a.seed)?;
            if let Some(s) = &a.server {
                opts.server_tcp = s.clone();
            }
            if let Some(s) = &a.server_udp {
                opts.server_udp = s.clone();
            }
            if let Some(n) = &a.name {
                opts.name = n.clone();
            }
            opts.stop_after_tasks = a.tasks;
            opts.max_duration = Duration::from_secs(a.timeout);
            let report = run_client(&opts)?;
            w(out, format!("role {:?}, completed tasks {:?}\n", report.role, report.completed))
        }
    }
}

fn stats(a: &StatsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for path in &a.logs {
        let events = read_jsonl(path)?;
        for task in split_tasks(&events)? {
            let row = score_log(task)?;
            if row.task > 0 || a.include_training {
                rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Failed("no study tasks in the given logs".into()));
    }
    let table = summarize_all(&rows);
    let s = if a.json { serde_json::to_string_pretty(&table).expect("table serializes") + "\n" } else { table.to_string() };
    out.write_all(s.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

fn proj(a: &ProjArgs, cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = Config::load(cli.config.as_deref())?;
    let volume = cfg.volume()?;
    let screen = a.screen.unwrap_or(*volume.local_plane());
    let eye = a.eye.unwrap_or_else(|| Stance::default().eye(Role::Instructor, &volume));
    let m = projection_matrix(&eye, &screen, a.near, a.far)?;
    let mut s = format!("eye {:.4} {:.4} {:.4}\nprojection\n", eye.x, eye.y, eye.z);
    for r in 0..4 {
        s += &format!("  {:>12.6} {:>12.6} {:>12.6} {:>12.6}\n", m[(r, 0)], m[(r, 1)], m[(r, 2)], m[(r, 3)]);
    }
    let expected = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let names = ["lower-left", "lower-right", "upper-right", "upper-left"];
    let mut worst: f64 = 0.0;
    for ((corner, (ex, ey)), name) in screen.corners().iter().zip(expected).zip(names) {
        let p = project_point(&m, corner);
        let err = (p.x - ex).abs().max((p.y - ey).abs());
        worst = worst.max(err);
        s += &format!("{name:<12} ndc {:>10.7} {:>10.7}  error {err:.1e}\n", p.x, p.y);
    }
    let ok = worst <= GEOMETRIC_EPS;
    s += &format!("corner check: {}\n", if ok { "ok" } else { "FAILED" });
    out.write_all(s.as_bytes()).map_err(io_err(Path::new("<stdout>")))?;
    if ok { Ok(()) } else { Err(CliError::Failed(format!("corner error {worst:.1e} exceeds {GEOMETRIC_EPS:e}"))) }
}

fn simulate(a: &SimulateArgs, cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(loss) = a.loss {
        cfg.network.loss = loss;
    }
    if let Some(ms) = a.latency {
        cfg.network.latency_ms = ms;
    }
    if let Some(m) = a.click_mode {
        cfg.session.click_mode = m.into();
    }
    cfg.validate()?;
    let base_pair = cfg.session.pair_id;
    let mut rows = Vec::new();
    for i in 0..a.pairs {
        cfg.session.pair_id = base_pair + i;
        let sim = SimConfig::from_config(&cfg, a.seed.wrapping_add(i as u64))?;
        let outcome = simulate_session(&sim)?;
        if !outcome.converged() {
            return Err(CliError::Failed(format!("pair {}: replicas diverged from the server board", cfg.session.pair_id)));
        }
        if let Some(dir) = &a.out {
            let mut logs = vec![outcome.training.clone()];
            logs.extend(outcome.tasks.iter().cloned());
            write_session_logs(dir, cfg.session.pair_id, &logs)?;
        }
        for log in &outcome.tasks {
            rows.push(score_log(log.events())?);
        }
    }
    let table = summarize_all(&rows);
    let s = if a.json { serde_json::to_string_pretty(&table).expect("table serializes") + "\n" } else { table.to_string() };
    out.write_all(s.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

fn interrupt_flag() -> Arc<AtomicBool> {
    static FLAG: OnceLock<Arc<AtomicBool>> = OnceLock::new();
    Arc::clone(FLAG.get_or_init(|| {
        let flag = Arc::new(AtomicBool::new(false));
        let f = Arc::clone(&flag);
        if let Err(e) = ctrlc::set_handler(move || f.store(true, Ordering::Relaxed)) {
            log::warn!("cannot install interrupt handler: {e}");
        }
        flag
    }))
}

fn serve(a: &ServeArgs, cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(p) = a.pair {
        cfg.session.pair_id = p;
    }
    let mut opts = ServeOptions::from_config(&cfg)?;
    if let Some(t) = &a.tcp {
        opts.tcp = t.clone();
    }
    if let Some(u) = &a.udp {
        opts.udp = u.clone();
    }
    if let Some(g) = &a.gateway {
        opts.gateway = Some(g.clone());
    }
    if a.no_gateway {
        opts.gateway = None;
    }
    opts.log_dir = a.log_dir.clone();
    let server = Server::bind(opts)?;
    let gateway = server.gateway_addr().map(|g| format!(", gateway ws://{g}/")).unwrap_or_default();
    writeln!(out, "serving tcp {} udp {}{gateway}", server.tcp_addr(), server.udp_addr()).map_err(io_err(Path::new("<stdout>")))?;
    out.flush().map_err(io_err(Path::new("<stdout>")))?;
    let report = server.run(&interrupt_flag())?;
    let mut s = format!("session ended in phase {} with {} finished tasks\n", report.phase, report.logs.len());
    for f in &report.log_files {
        s += &format!("wrote {}\n", f.display());
    }
    out.write_all(s.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let code = run(std::iter::once("negspace").chain(args.iter().copied()), &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn help_and_usage_codes() {
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
        assert_eq!(run_capture(&["puzzle", "gen", "--help"]).0, EXIT_OK);
        assert_eq!(run_capture(&["simulate", "--pairs", "zero"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["nope"]).0, EXIT_USAGE);
    }

    #[test]
    fn proj_rejects_eye_in_plane() {
        let (code, out) = run_capture(&["proj"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("corner check: ok"));
        assert_eq!(run_capture(&["proj", "--eye", "0.1,0.2,-0.25"]).0, EXIT_DOMAIN);
    }
}
