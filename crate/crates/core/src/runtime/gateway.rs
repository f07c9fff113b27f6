//! WebSocket bridge. Each text message is one frame in the JSON text form
//! (`{"seq":0,"type":"HIGHLIGHT","payload":{"cube":3}}`); both channels share
//! the socket.

use std::io;
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{Receiver, Sender, TryRecvError};
use std::sync::Arc;
use std::time::Duration;

use tungstenite::{Message as WsMessage, WebSocket};

use super::live::{ConnId, Event, LiveError, Sink};
use crate::protocol::{Frame, TextError, from_text, to_text};

const POLL: Duration = Duration::from_millis(10);

fn would_block(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut))
}

/// Serves one browser connection until it closes or `shutdown` is set.
pub(crate) fn serve_connection(stream: TcpStream, conn: ConnId, events: Sender<Event>, shutdown: Arc<AtomicBool>) {
    let peer = match stream.peer_addr() {
        Ok(p) => p,
        Err(_) => return,
    };
    let mut ws = match tungstenite::accept(stream) {
        Ok(ws) => ws,
        Err(e) => {
            log::warn!("gateway handshake with {peer} failed: {e}");
            return;
        }
    };
    if ws.get_ref().set_read_timeout(Some(POLL)).is_err() {
        return;
    }
    let (tx, rx) = std::sync::mpsc::channel::<String>();
    if events.send(Event::Connected { conn, peer, sink: Sink::Text(tx) }).is_err() {
        return;
    }
    pump(&mut ws, conn, &events, &rx, &shutdown);
    let _ = ws.close(None);
    let _ = ws.flush();
    let _ = events.send(Event::Disconnected { conn });
}

fn pump(ws: &mut WebSocket<TcpStream>, conn: ConnId, events: &Sender<Event>, outgoing: &Receiver<String>, shutdown: &AtomicBool) {
    loop {
        if shutdown.load(Ordering::Relaxed) {
            return;
        }
        loop {
            match outgoing.try_recv() {
                Ok(text) => {
                    if ws.send(WsMessage::text(text)).is_err() {
                        return;
                    }
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => return,
            }
        }
        match ws.read() {
            Ok(WsMessage::Text(text)) => match from_text(text.as_str()) {
                Ok(frame) => {
                    if events.send(Event::Frame { conn, frame }).is_err() {
                        return;
                    }
                }
                Err(e) => log::warn!("gateway: dropping malformed text frame: {e}"),
            },
            Ok(WsMessage::Close(_)) => return,
            Ok(_) => {}
            Err(e) if would_block(&e) => {}
            Err(e) => {
                log::debug!("gateway connection closed: {e}");
                return;
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error(transparent)]
    Socket(#[from] tungstenite::Error),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("gateway closed the connection")]
    Closed,
}

/// Blocking text-socket client, for tools and tests that talk to the gateway.
pub struct GatewayClient {
    ws: WebSocket<TcpStream>,
}

impl GatewayClient {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, LiveError> {
        let stream = TcpStream::connect(addr)?;
        let url = format!("ws://{}/", stream.peer_addr()?);
        let (ws, _) = tungstenite::client(url.as_str(), stream).map_err(|e| LiveError::Handshake(e.to_string()))?;
        Ok(Self { ws })
    }

    pub fn set_timeout(&self, timeout: Option<Duration>) -> io::Result<()> {
        self.ws.get_ref().set_read_timeout(timeout)
    }

    pub fn send(&mut self, frame: &Frame) -> Result<(), GatewayError> {
        self.send_text(&to_text(frame))
    }

    pub fn send_text(&mut self, text: &str) -> Result<(), GatewayError> {
        self.ws.send(WsMessage::text(text))?;
        Ok(())
    }

    /// Next frame from the gateway; `Ok(None)` when the read timed out.
    pub fn recv(&mut self) -> Result<Option<Frame>, GatewayError> {
        loop {
            match self.ws.read() {
                Ok(WsMessage::Text(text)) => return Ok(Some(from_text(text.as_str())?)),
                Ok(WsMessage::Close(_)) => return Err(GatewayError::Closed),
                Ok(_) => {}
                Err(e) if would_block(&e) => return Ok(None),
                Err(tungstenite::Error::ConnectionClosed) => return Err(GatewayError::Closed),
                Err(e) => return Err(e.into()),
            }
        }
    }
}
