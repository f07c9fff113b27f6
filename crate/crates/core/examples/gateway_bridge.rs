//! Starts a loopback server, joins one participant through the WebSocket
//! gateway and one over TCP, and prints what the browser side receives.
//!
//! cargo run --example gateway_bridge

use std::io::Write;
use std::net::TcpStream;
use std::time::Duration;

use negspace::protocol::{Frame, Join, Message, encode, to_text};
use negspace::runtime::{GatewayClient, HostConfig, ServeOptions, Server};

fn main() {
    let server = Server::bind(ServeOptions::loopback(HostConfig::standard(0))).expect("loopback ports are free");
    let gateway = server.gateway_addr().expect("gateway enabled");
    let tcp = server.tcp_addr();
    println!("tcp {tcp}, udp {}, gateway ws://{gateway}/", server.udp_addr());
    let running = server.spawn();

    let mut browser = GatewayClient::connect(gateway).expect("gateway accepts");
    browser.set_timeout(Some(Duration::from_millis(500))).unwrap();
    browser.send(&Frame::new(0, Message::Join(Join { udp_port: 0, name: "browser".into() }))).unwrap();

    let mut native = TcpStream::connect(tcp).unwrap();
    native.write_all(&encode(&Frame::new(0, Message::Join(Join { udp_port: 0, name: "native".into() }))).unwrap()).unwrap();

    while let Ok(Some(frame)) = browser.recv() {
        println!("<- {}", to_text(&frame));
    }
    let report = running.stop().expect("server shuts down cleanly");
    println!("server stopped in phase {}", report.phase);
}
