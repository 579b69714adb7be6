//! Small UDP helpers shared by the live runner, sender and bridge.

use std::io::ErrorKind;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use handswarm::netproto::{encode, Payload, WireMessage, MAX_DATAGRAM};

pub const POLL: Duration = Duration::from_millis(50);

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

pub fn bind(addr: &str) -> Result<UdpSocket> {
    let s = UdpSocket::bind(addr).with_context(|| format!("binding UDP {addr}"))?;
    s.set_read_timeout(Some(POLL))?;
    Ok(s)
}

pub fn resolve(addr: &str) -> Result<SocketAddr> {
    addr.to_socket_addrs()
        .with_context(|| format!("resolving {addr}"))?
        .next()
        .with_context(|| format!("{addr} resolves to nothing"))
}

/// One datagram, or `None` when the poll interval passes without one.
pub fn recv(socket: &UdpSocket, buf: &mut [u8; MAX_DATAGRAM + 1]) -> Result<Option<(usize, SocketAddr)>> {
    match socket.recv_from(buf) {
        Ok(r) => Ok(Some(r)),
        Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => Ok(None),
        // ICMP port-unreachable from an earlier send shows up here on some systems
        Err(e) if e.kind() == ErrorKind::ConnectionReset => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Sends messages with consecutive sequence numbers.
pub struct Sender {
    pub socket: UdpSocket,
    pub next_seq: u64,
}

impl Sender {
    pub fn new(socket: UdpSocket) -> Self {
        Self { socket, next_seq: 1 }
    }

    pub fn send(&mut self, to: SocketAddr, payload: Payload) -> Result<u64> {
        let seq = self.next_seq;
        self.next_seq += 1;
        let bytes = encode(&WireMessage::new(seq, now_ms(), payload))?;
        self.socket.send_to(&bytes, to)?;
        Ok(seq)
    }

    pub fn send_raw(&self, to: SocketAddr, bytes: &[u8]) -> Result<()> {
        self.socket.send_to(bytes, to)?;
        Ok(())
    }
}
