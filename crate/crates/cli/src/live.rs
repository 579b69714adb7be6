//! Real-time scenario execution with UDP command, keypoint and telemetry
//! channels.
//!
//! Threads: one listener per inbound port feeding bounded queues, and the
//! engine loop on the calling thread. Nothing is shared mutably; the engine
//! thread owns the simulation and sends telemetry snapshots itself.

use std::collections::BTreeMap;
use std::io::Write;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use crossbeam_channel::{bounded, Receiver as Rx, Sender as Tx, TrySendError};
use handswarm::command::Command;
use handswarm::fusion::FusionConfig;
use handswarm::gesture::{ClassifierModel, KeypointFrame};
use handswarm::mapping::MappingRules;
use handswarm::netproto::{
    encode_telemetry, telemetry_snapshot, AckPayload, AckStatus, Payload, Receiver, MAX_DATAGRAM,
};
use handswarm::pipeline::GesturePipeline;
use handswarm::scenario::{write_rows, RunMetrics, Scenario, ScenarioRun, TRAJECTORY_HEADER};

use crate::net::{bind, now_ms, recv, resolve, Sender};
use crate::RunArgs;

const COMMAND_QUEUE: usize = 1024;
const KEYPOINT_QUEUE: usize = 256;

static STOP: AtomicBool = AtomicBool::new(false);

/// Installs the interrupt handler once per process.
pub fn stop_flag() -> &'static AtomicBool {
    static INSTALLED: std::sync::Once = std::sync::Once::new();
    INSTALLED.call_once(|| {
        if let Err(e) = ctrlc::set_handler(|| STOP.store(true, Ordering::SeqCst)) {
            log::warn!("cannot install interrupt handler: {e}");
        }
    });
    &STOP
}

fn command_listener(socket: UdpSocket, tx: Tx<(Command, SocketAddr)>, stop: Arc<AtomicBool>) -> JoinHandle<()> {
    std::thread::spawn(move || {
        let mut rx = Receiver::new();
        let mut acks = Sender::new(socket.try_clone().expect("socket clone"));
        let mut buf = [0u8; MAX_DATAGRAM + 1];
        while !stop.load(Ordering::SeqCst) {
            let Ok(Some((n, peer))) = recv(&socket, &mut buf) else {
                continue;
            };
            let got = match rx.accept(&peer.to_string(), &buf[..n]) {
                Ok(g) => g,
                Err(e) => {
                    log::warn!("dropped datagram from {peer}: {e}");
                    continue;
                }
            };
            let Payload::Command(cmd) = got.message.payload else {
                log::warn!("ignoring {} message on the command port", got.message.kind().name());
                continue;
            };
            let status = if got.duplicate { AckStatus::Duplicate } else { AckStatus::Received };
            if let Err(e) = acks.send(peer, Payload::Ack(AckPayload { seq: got.message.seq, status })) {
                log::warn!("ack to {peer} failed: {e}");
            }
            if got.duplicate {
                continue;
            }
            match tx.try_send((cmd, peer)) {
                Ok(()) => {}
                Err(TrySendError::Full(_)) => log::warn!("command queue full, dropping seq {}", got.message.seq),
                Err(TrySendError::Disconnected(_)) => break,
            }
        }
    })
}

fn keypoint_listener(socket: UdpSocket, tx: Tx<KeypointFrame>, stop: Arc<AtomicBool>) -> JoinHandle<()> {
    std::thread::spawn(move || {
        let mut rx = Receiver::new();
        let mut buf = [0u8; MAX_DATAGRAM + 1];
        while !stop.load(Ordering::SeqCst) {
            let Ok(Some((n, peer))) = recv(&socket, &mut buf) else {
                continue;
            };
            match rx.accept(&peer.to_string(), &buf[..n]) {
                Ok(g) if g.duplicate => {}
                Ok(g) => match g.message.payload {
                    Payload::Keypoints(f) => {
                        if let Err(TrySendError::Disconnected(_)) = tx.try_send(f) {
                            break;
                        }
                    }
                    _ => log::warn!("ignoring {} message on the keypoint port", g.message.kind().name()),
                },
                Err(e) => log::warn!("dropped keypoint datagram from {peer}: {e}"),
            }
        }
    })
}

fn load_pipeline(args: &RunArgs) -> Result<Option<GesturePipeline>> {
    let Some(path) = &args.model else {
        return Ok(None);
    };
    let static_model = ClassifierModel::load(path).with_context(|| format!("loading {}", path.display()))?;
    let dynamic = match &args.dynamic_model {
        Some(p) => Some(ClassifierModel::load(p).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    let rules = match &args.mapping {
        Some(p) => MappingRules::load(p).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?,
        None => MappingRules::default_rules(),
    };
    Ok(Some(GesturePipeline::new(static_model, dynamic, rules, FusionConfig::default())?))
}

pub fn run_live<W: Write>(scenario: &Scenario, args: &RunArgs, out: W) -> Result<RunMetrics> {
    let global_stop = stop_flag();
    let stop = Arc::new(AtomicBool::new(false));
    let mut pipeline = load_pipeline(args)?;
    let cmd_socket = bind(&format!("0.0.0.0:{}", args.ports.command))?;
    let kp_socket = bind(&format!("0.0.0.0:{}", args.ports.keypoints))?;
    let telemetry_to = resolve(&format!("{}:{}", args.telemetry_host, args.ports.telemetry))?;
    let mut telemetry = Sender::new(bind("0.0.0.0:0")?);
    let mut echoes = Sender::new(cmd_socket.try_clone()?);

    let (cmd_tx, cmd_rx): (Tx<_>, Rx<_>) = bounded(COMMAND_QUEUE);
    let (kp_tx, kp_rx) = bounded(KEYPOINT_QUEUE);
    let listeners = vec![
        command_listener(cmd_socket, cmd_tx, stop.clone()),
        keypoint_listener(kp_socket, kp_tx, stop.clone()),
    ];
    log::info!(
        "live: commands on {}, keypoints on {}, telemetry to {telemetry_to}",
        args.ports.command,
        args.ports.keypoints
    );

    let mut run = ScenarioRun::new(scenario)?;
    if args.hold_open {
        run.set_open_ended();
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    write_rows(&mut w, &run.engine().world)?;

    let dt = run.engine().world.dt;
    let period = ((1.0 / (args.rate.max(1e-3) * dt)).round() as u64).max(1);
    let mut origin: BTreeMap<u64, SocketAddr> = BTreeMap::new();
    let start = Instant::now();
    let result = (|| -> Result<()> {
        while !global_stop.load(Ordering::SeqCst) {
            for (cmd, peer) in cmd_rx.try_iter() {
                origin.insert(cmd.seq, peer);
                run.engine_mut().submit(cmd);
            }
            if let Some(p) = pipeline.as_mut() {
                for frame in kp_rx.try_iter() {
                    let engine = run.engine();
                    let outcome = p.process(&frame, engine.controller.current_mode, engine.world.tick)?;
                    if let Some(cmd) = outcome.command {
                        log::info!("gesture command {} (seq {})", cmd.verb(), cmd.seq);
                        run.engine_mut().submit(cmd);
                    }
                }
            } else {
                let n = kp_rx.try_iter().count();
                if n > 0 {
                    log::debug!("no gesture model loaded; ignored {n} keypoint frames");
                }
            }
            let Some(report) = run.step()? else { break };
            write_rows(&mut w, &run.engine().world)?;
            for e in &report.echoes {
                if let Some(peer) = origin.remove(&e.seq) {
                    echoes.send(peer, Payload::Echo(e.clone()))?;
                }
            }
            let tick = run.engine().world.tick;
            if tick % period == 0 {
                let snap = telemetry_snapshot(run.engine(), pipeline.as_ref().map(|p| p.status()));
                let first = telemetry.next_seq;
                let parts = encode_telemetry(&snap, first, now_ms())?;
                telemetry.next_seq += parts.len() as u64;
                for part in parts {
                    telemetry.send_raw(telemetry_to, &part)?;
                }
            }
            let due = start + Duration::from_secs_f64(tick as f64 * dt);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        Ok(())
    })();
    stop.store(true, Ordering::SeqCst);
    for l in listeners {
        let _ = l.join();
    }
    w.flush()?;
    result?;
    if global_stop.load(Ordering::SeqCst) {
        log::info!("interrupted at tick {}", run.engine().world.tick);
    }
    Ok(run.metrics())
}
