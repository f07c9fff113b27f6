use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::thread;
use std::time::Duration;

use negspace::protocol::*;
use negspace::runtime::*;

struct Addrs {
    tcp: String,
    udp: String,
    gateway: String,
}

fn spawn_server(host: HostConfig) -> (RunningServer, Addrs) {
    let server = Server::bind(ServeOptions::loopback(host)).unwrap();
    let addrs = Addrs {
        tcp: server.tcp_addr().to_string(),
        udp: server.udp_addr().to_string(),
        gateway: server.gateway_addr().unwrap().to_string(),
    };
    (server.spawn(), addrs)
}

fn join(addr: &str, name: &str) -> TcpStream {
    let mut s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let frame = Frame::new(0, Message::Join(Join { udp_port: 0, name: name.into() }));
    s.write_all(&encode(&frame).unwrap()).unwrap();
    s
}

/// Reads frames until one satisfies `pred`.
fn until(s: &mut TcpStream, pred: impl Fn(&Message) -> bool) -> Message {
    loop {
        let f = read_frame(s).unwrap().expect("stream ended");
        if pred(&f.message) {
            return f.message;
        }
    }
}

#[test]
fn two_clients_start_training_and_a_third_is_refused() {
    let (server, addrs) = spawn_server(HostConfig::standard(0));
    let mut a = join(&addrs.tcp, "a");
    let first = until(&mut a, |_| true);
    assert_eq!(first, Message::RoleAssign(RoleAssign { participant: 0, role: 1 }));
    let mut b = join(&addrs.tcp, "b");
    assert_eq!(until(&mut b, |_| true), Message::RoleAssign(RoleAssign { participant: 1, role: 2 }));
    assert!(server.wait_for(Duration::from_secs(5), |s| s.phase == Phase::Training));

    let Message::StateSnapshot(snap) = until(&mut b, |m| matches!(m, Message::StateSnapshot(_))) else { unreachable!() };
    assert_eq!(snap.cubes.len(), 5);
    assert!(snap.cubes.iter().all(|c| c.color == 0), "assembler snapshot must not carry colors");
    let Message::StateSnapshot(snap) = until(&mut a, |m| matches!(m, Message::StateSnapshot(_))) else { unreachable!() };
    assert!(snap.cubes.iter().all(|c| c.color != 0));

    let mut c = join(&addrs.tcp, "c");
    let Message::Reject(r) = until(&mut c, |_| true) else { panic!("third client was not rejected") };
    assert_eq!(r.code, RejectCode::SessionFull);
    assert!(server.wait_for(Duration::from_secs(5), |s| s.refused == 1 && s.participants == 2));

    let report = server.stop().unwrap();
    assert_eq!(report.phase, Phase::Training);
    assert_eq!(report.refused, 1);
}

#[test]
fn gateway_speaks_the_text_form() {
    let (server, addrs) = spawn_server(HostConfig::standard(0));
    let mut browser = GatewayClient::connect(&addrs.gateway).unwrap();
    browser.set_timeout(Some(Duration::from_secs(5))).unwrap();
    browser.send_text(r#"{"seq":0,"type":"JOIN","payload":{"udp_port":0,"name":"web"}}"#).unwrap();
    let frame = browser.recv().unwrap().expect("role assignment");
    assert_eq!(frame.message, Message::RoleAssign(RoleAssign { participant: 0, role: 1 }));

    let _tcp = join(&addrs.tcp, "native");
    let mut kinds = Vec::new();
    while kinds.len() < 2 {
        let f = browser.recv().unwrap().expect("task start and snapshot");
        kinds.push(f.message.kind());
    }
    assert_eq!(kinds, [MessageType::TaskStart, MessageType::StateSnapshot]);

    // A malformed text frame is dropped without closing the socket.
    browser.send_text("{not json").unwrap();
    browser.send(&Frame::new(1, Message::SnapshotRequest(Empty {}))).unwrap();
    let f = browser.recv().unwrap().expect("snapshot reply");
    assert_eq!(f.message.kind(), MessageType::StateSnapshot);
    server.stop().unwrap();
}

#[test]
fn occupied_port_is_a_bind_failure() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let mut opts = ServeOptions::loopback(HostConfig::standard(0));
    opts.tcp = taken.local_addr().unwrap().to_string();
    assert!(matches!(Server::bind(opts), Err(LiveError::BindFailure { .. })));
}

#[test]
fn reconnecting_participant_gets_a_fresh_snapshot() {
    let (server, addrs) = spawn_server(HostConfig::standard(0));
    let mut a = join(&addrs.tcp, "a");
    let mut b = join(&addrs.tcp, "b");
    until(&mut a, |m| matches!(m, Message::StateSnapshot(_)));
    until(&mut b, |m| matches!(m, Message::StateSnapshot(_)));
    drop(b);
    assert!(server.wait_for(Duration::from_secs(5), |s| s.participants == 1));
    let mut b2 = join(&addrs.tcp, "b again");
    assert_eq!(until(&mut b2, |_| true), Message::RoleAssign(RoleAssign { participant: 1, role: 2 }));
    assert_eq!(until(&mut b2, |_| true).kind(), MessageType::TaskStart);
    assert_eq!(until(&mut b2, |_| true).kind(), MessageType::StateSnapshot);
    assert_eq!(server.stop().unwrap().phase, Phase::Training);
}

#[test]
fn headless_agents_finish_a_live_session() {
    let mut cfg = Config::default();
    cfg.session.pose_rate_hz = 200.0;
    cfg.session.click_mode = ClickMode::ReliableClicks;
    cfg.timing = cfg.timing.scaled(0.2);
    let (server, addrs) = spawn_server(cfg.host_config().unwrap());
    cfg.server.tcp = addrs.tcp;
    cfg.server.udp = addrs.udp;
    let clients: Vec<_> = (0..2)
        .map(|seed| {
            let mut opts = ClientOptions::from_config(&cfg, seed).unwrap();
            opts.max_duration = Duration::from_secs(60);
            thread::spawn(move || run_client(&opts))
        })
        .collect();
    for c in clients {
        let report = c.join().unwrap().unwrap();
        assert_eq!(report.completed, (0..=8).collect::<Vec<u8>>());
    }
    let report = server.join().unwrap();
    assert_eq!(report.phase, Phase::Done);
    assert_eq!(report.logs.len(), 9);
}
