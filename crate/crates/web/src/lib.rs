//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Each demo keeps a fallible `try_*` core that native tests call; the
//! exported methods only convert errors to `JsError`.

use handswarm::fusion::{FusionBuffer, FusionConfig, PushOutcome};
use handswarm::geom::{Rect, Vec2};
use handswarm::gesture::{GestureKind, GestureObservation};
use handswarm::scenario::Scenario;
use handswarm::tasks::coverage::{coverage_cost, lloyd_step, voronoi_partition};
use handswarm::{Action, Command, Engine};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

/// A swarm flying in formation that accepts operator verbs.
#[wasm_bindgen]
pub struct SwarmDemo {
    engine: Engine,
    seq: u64,
    last: serde_json::Value,
}

impl SwarmDemo {
    pub fn try_new(uav_count: u32, seed: u64) -> handswarm::Result<SwarmDemo> {
        let text = json!({
            "name": "demo",
            "uav_count": uav_count,
            "placement": {"kind": "formation", "formation": "Circle", "center": [0.0, 0.0, 20.0], "scale": 12.0},
            "initial_mode": "Formation",
            "timeline": [],
            "duration_s": 3600.0,
            "seed": seed,
        })
        .to_string();
        let mut engine = Scenario::parse(&text)?.build_engine()?;
        let _ = engine.dispatch_now(&Command::new(1, 0, Action::from_verb("set_formation", json!({"kind": "Circle"})).unwrap()));
        Ok(SwarmDemo {
            engine,
            seq: 1,
            last: serde_json::Value::Null,
        })
    }

    pub fn try_command(&mut self, verb: &str, args: &str) -> handswarm::Result<String> {
        let args: serde_json::Value = if args.trim().is_empty() {
            json!({})
        } else {
            serde_json::from_str(args).map_err(|e| handswarm::Error::InvalidParameter(e.to_string()))?
        };
        let action = Action::from_verb(verb, args).map_err(handswarm::Error::InvalidParameter)?;
        self.seq += 1;
        let echo = self.engine.dispatch_now(&Command::new(self.seq, self.engine.world.tick, action));
        self.last = serde_json::to_value(&echo).unwrap_or_default();
        Ok(self.last.to_string())
    }

    pub fn try_step(&mut self, ticks: u32) -> handswarm::Result<()> {
        for _ in 0..ticks {
            self.engine.tick()?;
        }
        Ok(())
    }
}

#[wasm_bindgen]
impl SwarmDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(uav_count: u32, seed: u32) -> Result<SwarmDemo, JsError> {
        Self::try_new(uav_count, seed.into()).map_err(js)
    }

    /// Issues one verb with JSON arguments; returns the echo as JSON.
    ///
    /// Local verbs run in the current mode only, as with a real operator.
    pub fn command(&mut self, verb: &str, args: &str) -> Result<String, JsError> {
        self.try_command(verb, args).map_err(js)
    }

    /// Switches to formation mode and reshapes every group.
    pub fn set_formation(&mut self, kind: &str) -> Result<String, JsError> {
        self.try_command("switch_mode", r#"{"mode":"Formation"}"#).map_err(js)?;
        self.try_command("set_formation", &json!({ "kind": kind }).to_string()).map_err(js)
    }

    pub fn emergency_stop(&mut self) -> Result<String, JsError> {
        self.try_command("emergency_stop", "").map_err(js)
    }

    pub fn step(&mut self, ticks: u32) -> Result<(), JsError> {
        self.try_step(ticks).map_err(js)
    }

    /// Flattened `[x, y, z, ...]` positions in id order.
    pub fn positions(&self) -> Vec<f64> {
        self.engine.world.uavs.iter().flat_map(|u| [u.position.x, u.position.y, u.position.z]).collect()
    }

    /// Group id per UAV, in the same order as `positions`.
    pub fn groups(&self) -> Vec<u32> {
        self.engine
            .world
            .uavs
            .iter()
            .map(|u| self.engine.controller.group_of(u.id).unwrap_or(0))
            .collect()
    }

    /// Tick, time, mode, collisions, spacing error, max speed and the last echo.
    pub fn status(&self) -> String {
        let w = &self.engine.world;
        json!({
            "tick": w.tick,
            "time_s": w.time(),
            "mode": self.engine.controller.current_mode.name(),
            "collisions": w.metrics.collision_count,
            "spacing_error": self.engine.current_spacing_error(),
            "max_speed": w.uavs.iter().map(|u| u.velocity.norm()).fold(0.0, f64::max),
            "last_echo": self.last,
        })
        .to_string()
    }
}

/// Lloyd relaxation of random sites in a square.
#[wasm_bindgen]
pub struct CoverageDemo {
    region: Rect,
    sites: Vec<Vec2>,
    iterations: u32,
}

impl CoverageDemo {
    pub fn try_new(site_count: u32, half_size: f64, seed: u64) -> handswarm::Result<CoverageDemo> {
        if site_count == 0 || half_size.is_nan() || half_size <= 0.0 {
            return Err(handswarm::Error::InvalidParameter("need at least one site and a positive size".into()));
        }
        let region = Rect::new(Vec2::new(-half_size, -half_size), Vec2::new(half_size, half_size));
        // SplitMix64 keeps the demo free of an RNG dependency
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
        };
        let sites = (0..site_count)
            .map(|_| Vec2::new((next() * 2.0 - 1.0) * half_size, (next() * 2.0 - 1.0) * half_size))
            .collect();
        Ok(CoverageDemo {
            region,
            sites,
            iterations: 0,
        })
    }

    pub fn try_step(&mut self) -> handswarm::Result<f64> {
        let (next, moved) = lloyd_step(&self.sites, &self.region)?;
        self.sites = next;
        self.iterations += 1;
        Ok(moved)
    }

    pub fn try_cost(&self) -> handswarm::Result<f64> {
        coverage_cost(&self.sites, &self.region)
    }
}

#[wasm_bindgen]
impl CoverageDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(site_count: u32, half_size: f64, seed: u32) -> Result<CoverageDemo, JsError> {
        Self::try_new(site_count, half_size, seed.into()).map_err(js)
    }

    /// One Lloyd iteration; returns the largest site displacement.
    pub fn step(&mut self) -> Result<f64, JsError> {
        self.try_step().map_err(js)
    }

    pub fn cost(&self) -> Result<f64, JsError> {
        self.try_cost().map_err(js)
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    /// Moves site `index` to `(x, y)`, clamped to the region.
    pub fn move_site(&mut self, index: usize, x: f64, y: f64) {
        if let Some(s) = self.sites.get_mut(index) {
            *s = self.region.clamp(Vec2::new(x, y));
            self.iterations = 0;
        }
    }

    pub fn sites(&self) -> Vec<f64> {
        self.sites.iter().flat_map(|s| [s.x, s.y]).collect()
    }

    /// Cells as a JSON array of `[[x, y], ...]` vertex lists.
    pub fn cells(&self) -> Result<String, JsError> {
        let cells = voronoi_partition(&self.sites, &self.region).map_err(js)?;
        let out: Vec<Vec<[f64; 2]>> = cells.iter().map(|c| c.vertices.iter().map(|v| [v.x, v.y]).collect()).collect();
        Ok(serde_json::to_string(&out).unwrap_or_default())
    }
}

/// Frame-by-frame decision fusion with the default P, N and F.
#[wasm_bindgen]
pub struct FusionDemo {
    buffer: FusionBuffer,
    frame: u64,
}

impl Default for FusionDemo {
    fn default() -> Self {
        Self::new()
    }
}

#[wasm_bindgen]
impl FusionDemo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> FusionDemo {
        FusionDemo {
            buffer: FusionBuffer::new(FusionConfig::default()).expect("default fusion config is valid"),
            frame: 0,
        }
    }

    /// Feeds one classified frame. Returns JSON with the push outcome, the
    /// decision if one fired, the buffered labels and the blank frames left.
    pub fn push(&mut self, label: &str, confidence: f64) -> String {
        let obs = GestureObservation {
            label: label.to_string(),
            confidence,
            frame_index: self.frame,
            kind: GestureKind::Static,
        };
        let (outcome, decision) = self.buffer.observe(obs);
        self.frame += 1;
        json!({
            "frame": self.frame - 1,
            "outcome": match outcome {
                PushOutcome::Accepted => "accepted",
                PushOutcome::BelowThreshold => "below_threshold",
                PushOutcome::Blanked => "blanked",
            },
            "decision": decision,
            "buffer": self.buffer.labels(),
            "blank_frames_left": self.buffer.cooldown_remaining(self.frame),
        })
        .to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swarm_demo_switches_formation_and_stops() {
        let mut d = SwarmDemo::try_new(9, 1).unwrap();
        assert_eq!(d.positions().len(), 27);
        d.try_command("set_formation", r#"{"kind":"V"}"#).unwrap();
        assert!(d.last["status"] == "accepted", "{}", d.last);
        d.try_step(400).unwrap();
        let s: serde_json::Value = serde_json::from_str(&d.status()).unwrap();
        assert!(s["spacing_error"].as_f64().unwrap() < 1.0, "{s}");
        d.try_command("emergency_stop", "").unwrap();
        d.try_step(1).unwrap();
        let s: serde_json::Value = serde_json::from_str(&d.status()).unwrap();
        assert_eq!(s["max_speed"], 0.0);
        assert_eq!(s["collisions"], 0);
    }

    #[test]
    fn swarm_demo_rejects_bad_input() {
        let mut d = SwarmDemo::try_new(4, 1).unwrap();
        assert!(d.try_command("warp", "").is_err());
        assert!(d.try_command("set_formation", "{").is_err());
        // a Navigation verb in Formation mode is refused, not an error
        d.try_command("move_dir", r#"{"direction":[1,0,0]}"#).unwrap();
        assert_eq!(d.last["status"], "rejected");
    }

    #[test]
    fn coverage_demo_cost_does_not_increase() {
        let mut d = CoverageDemo::try_new(12, 50.0, 3).unwrap();
        let mut cost = d.try_cost().unwrap();
        for _ in 0..30 {
            d.try_step().unwrap();
            let c = d.try_cost().unwrap();
            assert!(c <= cost * (1.0 + 1e-12));
            cost = c;
        }
        assert_eq!(d.iterations(), 30);
        assert_eq!(d.sites().len(), 24);
    }

    #[test]
    fn fusion_demo_decides_after_a_full_buffer() {
        let mut d = FusionDemo::new();
        let mut decided = None;
        for i in 0..20 {
            let v: serde_json::Value = serde_json::from_str(&d.push("fist", 0.95)).unwrap();
            if !v["decision"].is_null() {
                decided = Some(i);
            }
        }
        assert_eq!(decided, Some(19));
        let v: serde_json::Value = serde_json::from_str(&d.push("fist", 0.99)).unwrap();
        assert_eq!(v["outcome"], "blanked");
        let low: serde_json::Value = serde_json::from_str(&FusionDemo::new().push("fist", 0.5)).unwrap();
        assert_eq!(low["outcome"], "below_threshold");
    }
}
