//! WebSocket relay for the operator console.
//!
//! Telemetry datagrams are reassembled and pushed to every WebSocket client
//! as one JSON text frame per snapshot. Text frames from clients must be
//! wire messages of kind `command`; they are forwarded unchanged to the
//! command port, and the resulting acks and echoes are broadcast back.

use std::net::{SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Args;
use crossbeam_channel::{bounded, Receiver as Rx, Sender as Tx, TrySendError};
use handswarm::netproto::{decode, encode_unbounded, Payload, TelemetryAssembler, WireMessage, MAX_DATAGRAM};
use tungstenite::{Error as WsError, Message};

use crate::live::stop_flag;
use crate::net::{bind, now_ms, recv, resolve, POLL};

#[derive(Args)]
pub struct BridgeArgs {
    #[arg(long, default_value_t = 8765)]
    ws_port: u16,
    /// Address the WebSocket server listens on.
    #[arg(long, default_value = "127.0.0.1")]
    ws_host: String,
    /// Port on which telemetry from a live run arrives.
    #[arg(long, default_value_t = handswarm::netproto::DEFAULT_TELEMETRY_PORT)]
    telemetry_port: u16,
    /// Command port of the live run.
    #[arg(long, default_value = "127.0.0.1:47801")]
    command_to: String,
}

const CLIENT_QUEUE: usize = 64;

#[derive(Clone, Default)]
struct Clients(Arc<Mutex<Vec<Tx<String>>>>);

impl Clients {
    fn add(&self) -> Rx<String> {
        let (tx, rx) = bounded(CLIENT_QUEUE);
        self.0.lock().expect("clients lock").push(tx);
        rx
    }

    fn broadcast(&self, text: &str) {
        self.0.lock().expect("clients lock").retain(|tx| match tx.try_send(text.to_string()) {
            Ok(()) => true,
            // a slow client misses a frame rather than stalling the relay
            Err(TrySendError::Full(_)) => true,
            Err(TrySendError::Disconnected(_)) => false,
        });
    }
}

fn relay_telemetry(socket: UdpSocket, clients: Clients) {
    let mut asm = TelemetryAssembler::default();
    let mut buf = [0u8; MAX_DATAGRAM + 1];
    let stop = stop_flag();
    while !stop.load(Ordering::SeqCst) {
        let Ok(Some((n, peer))) = recv(&socket, &mut buf) else {
            continue;
        };
        let msg = match decode(&buf[..n]) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("bad telemetry datagram from {peer}: {e}");
                continue;
            }
        };
        let Payload::Telemetry(part) = msg.payload else {
            continue;
        };
        if let Some(whole) = asm.push(part) {
            match encode_unbounded(&WireMessage::new(msg.seq, msg.timestamp_ms, Payload::Telemetry(whole))) {
                Ok(bytes) => clients.broadcast(&String::from_utf8_lossy(&bytes)),
                Err(e) => log::warn!("cannot re-encode telemetry: {e}"),
            }
        }
    }
}

fn relay_replies(socket: UdpSocket, clients: Clients) {
    let mut buf = [0u8; MAX_DATAGRAM + 1];
    let stop = stop_flag();
    while !stop.load(Ordering::SeqCst) {
        if let Ok(Some((n, _))) = recv(&socket, &mut buf) {
            if decode(&buf[..n]).is_ok() {
                clients.broadcast(&String::from_utf8_lossy(&buf[..n]));
            }
        }
    }
}

fn serve_client(stream: TcpStream, clients: Clients, commands: UdpSocket, command_to: SocketAddr) -> Result<()> {
    stream.set_read_timeout(None)?;
    let mut ws = tungstenite::accept(stream).map_err(|e| anyhow::anyhow!("handshake: {e}"))?;
    ws.get_ref().set_read_timeout(Some(POLL))?;
    let outgoing = clients.add();
    let stop = stop_flag();
    while !stop.load(Ordering::SeqCst) {
        match ws.read() {
            Ok(Message::Text(text)) => {
                let reply = match decode(text.as_bytes()) {
                    Ok(m) if matches!(m.payload, Payload::Command(_)) => {
                        commands.send_to(text.as_bytes(), command_to)?;
                        None
                    }
                    Ok(m) => Some(format!("only command messages are accepted, got {}", m.kind().name())),
                    Err(e) => Some(e.to_string()),
                };
                if let Some(r) = reply {
                    ws.send(Message::text(serde_json::json!({ "error": r, "timestamp_ms": now_ms() }).to_string()))?;
                }
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(WsError::Io(e)) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(WsError::ConnectionClosed | WsError::AlreadyClosed) => break,
            Err(e) => return Err(e.into()),
        }
        for text in outgoing.try_iter() {
            ws.send(Message::text(text))?;
        }
    }
    Ok(())
}

pub fn bridge(a: BridgeArgs) -> Result<()> {
    let stop = stop_flag();
    let clients = Clients::default();
    let command_to = resolve(&a.command_to)?;
    let telemetry = bind(&format!("0.0.0.0:{}", a.telemetry_port))?;
    let commands = bind("0.0.0.0:0")?;
    let listener = TcpListener::bind((a.ws_host.as_str(), a.ws_port))
        .with_context(|| format!("listening on {}:{}", a.ws_host, a.ws_port))?;
    listener.set_nonblocking(true)?;
    log::info!(
        "bridge: ws://{}:{} <-> telemetry :{} / commands {command_to}",
        a.ws_host,
        listener.local_addr()?.port(),
        a.telemetry_port
    );
    let mut threads = Vec::new();
    {
        let c = clients.clone();
        threads.push(std::thread::spawn(move || relay_telemetry(telemetry, c)));
    }
    {
        let c = clients.clone();
        let s = commands.try_clone()?;
        threads.push(std::thread::spawn(move || relay_replies(s, c)));
    }
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                stream.set_nonblocking(false)?;
                log::info!("console connected from {peer}");
                let c = clients.clone();
                let s = commands.try_clone()?;
                threads.push(std::thread::spawn(move || {
                    if let Err(e) = serve_client(stream, c, s, command_to) {
                        log::warn!("console {peer}: {e}");
                    }
                    log::info!("console {peer} disconnected");
                }));
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => std::thread::sleep(Duration::from_millis(20)),
            Err(e) => return Err(e.into()),
        }
    }
    for t in threads {
        let _ = t.join();
    }
    Ok(())
}
