//! Scripted command injection over UDP.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::Args;
use handswarm::command::{Action, Command, Mode};
use handswarm::netproto::{decode, encode, AckStatus, Payload, WireMessage, MAX_DATAGRAM};
use serde::Deserialize;

use crate::net::{bind, now_ms, recv, resolve};

#[derive(Args)]
pub struct SendArgs {
    /// Command port of a live run.
    #[arg(long, default_value = "127.0.0.1:47801")]
    to: String,
    /// JSON array of {"verb", "args", "mode"?, "delay_ms"?} steps.
    #[arg(long, conflicts_with = "verb")]
    script: Option<PathBuf>,
    #[arg(long)]
    verb: Option<String>,
    #[arg(long, default_value = "{}")]
    args: String,
    /// Mode stamped on the command; the verb's own mode when omitted.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value_t = 1)]
    seq_start: u64,
    /// Resend attempts when no ack arrives.
    #[arg(long, default_value_t = 5)]
    retries: u32,
    #[arg(long, default_value_t = 300)]
    ack_timeout_ms: u64,
    /// How long to wait for the dispatch echo after the ack.
    #[arg(long, default_value_t = 500)]
    echo_timeout_ms: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Step {
    verb: String,
    #[serde(default)]
    args: serde_json::Value,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    delay_ms: u64,
}

fn build(seq: u64, verb: &str, args: serde_json::Value, mode: Option<&str>) -> Result<Command> {
    let action = Action::from_verb(verb, args).map_err(anyhow::Error::msg)?;
    let mut cmd = Command::new(seq, 0, action);
    if let Some(m) = mode {
        cmd.mode = Mode::parse(m).with_context(|| format!("unknown mode {m:?}"))?;
    }
    Ok(cmd)
}

pub fn send(a: SendArgs) -> Result<()> {
    let steps: Vec<Step> = match (&a.script, &a.verb) {
        (Some(p), _) => serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        (None, Some(v)) => vec![Step {
            verb: v.clone(),
            args: serde_json::from_str(&a.args).context("--args must be JSON")?,
            mode: a.mode.clone(),
            delay_ms: 0,
        }],
        (None, None) => bail!("give --script or --verb"),
    };
    let to = resolve(&a.to)?;
    let socket = bind("0.0.0.0:0")?;
    let mut buf = [0u8; MAX_DATAGRAM + 1];
    let mut failures = 0;
    for (i, step) in steps.into_iter().enumerate() {
        std::thread::sleep(Duration::from_millis(step.delay_ms));
        let seq = a.seq_start + i as u64;
        let cmd = build(seq, &step.verb, step.args, step.mode.as_deref().or(a.mode.as_deref()))?;
        let bytes = encode(&WireMessage::new(seq, now_ms(), Payload::Command(cmd.clone())))?;
        let mut ack = None;
        let mut echo = None;
        // resends reuse the seq, so the receiver executes at most once
        for attempt in 0..=a.retries {
            if attempt > 0 {
                log::debug!("resending seq {seq} (attempt {attempt})");
            }
            socket.send_to(&bytes, to)?;
            let deadline = Instant::now() + Duration::from_millis(a.ack_timeout_ms);
            while ack.is_none() && Instant::now() < deadline {
                if let Some((n, _)) = recv(&socket, &mut buf)? {
                    match decode(&buf[..n]).map(|m| m.payload) {
                        Ok(Payload::Ack(p)) if p.seq == seq => ack = Some(p.status),
                        Ok(Payload::Echo(e)) if e.seq == seq => echo = Some(e),
                        _ => {}
                    }
                }
            }
            if ack.is_some() {
                break;
            }
        }
        let deadline = Instant::now() + Duration::from_millis(a.echo_timeout_ms);
        while ack.is_some() && echo.is_none() && Instant::now() < deadline {
            if let Some((n, _)) = recv(&socket, &mut buf)? {
                if let Ok(Payload::Echo(e)) = decode(&buf[..n]).map(|m| m.payload) {
                    if e.seq == seq {
                        echo = Some(e);
                    }
                }
            }
        }
        let ack_text = match ack {
            Some(AckStatus::Received) => "received",
            Some(AckStatus::Duplicate) => "duplicate",
            None => {
                failures += 1;
                "no ack"
            }
        };
        let echo_text = match &echo {
            Some(e) => serde_json::to_string(e)?,
            None => "no echo".into(),
        };
        println!("seq {seq} {}: {ack_text}; {echo_text}", cmd.verb());
    }
    if failures > 0 {
        bail!("{failures} command(s) were not acknowledged");
    }
    Ok(())
}
