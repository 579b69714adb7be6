//! Trajectory log replay.

use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use handswarm::netproto::encode_telemetry;
use handswarm::scenario::TrajectoryLog;

use crate::net::{bind, now_ms, resolve, Sender};
use crate::ReplayArgs;

pub fn replay(a: ReplayArgs) -> Result<()> {
    let log = TrajectoryLog::load(&a.log)?;
    let summary = log.summary(a.d_col);
    let mut out = serde_json::to_value(&summary)?;
    if a.play {
        if a.rate.is_nan() || a.rate <= 0.0 {
            bail!("--rate must be positive");
        }
        let target = a.telemetry_to.as_deref().map(resolve).transpose()?;
        let mut sender = match target {
            Some(_) => Some(Sender::new(bind("0.0.0.0:0")?)),
            None => None,
        };
        let collisions = log.collision_series(a.d_col);
        let t0 = log.frames[0].t;
        let start = Instant::now();
        let mut running = 0u64;
        let mut last_slot = None;
        for (i, frame) in log.frames.iter().enumerate() {
            running += collisions[i];
            let log_time = frame.t - t0;
            let due = start + Duration::from_secs_f64(log_time / a.rate);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
            let slot = (log_time * a.telemetry_hz).floor() as u64;
            if let (Some(s), Some(to)) = (sender.as_mut(), target) {
                if last_slot != Some(slot) {
                    let parts = encode_telemetry(&log.telemetry(i, running), s.next_seq, now_ms())?;
                    s.next_seq += parts.len() as u64;
                    for p in parts {
                        s.send_raw(to, &p)?;
                    }
                }
            }
            last_slot = Some(slot);
        }
        out["wall_clock_s"] = serde_json::json!(start.elapsed().as_secs_f64());
        out["rate"] = serde_json::json!(a.rate);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
