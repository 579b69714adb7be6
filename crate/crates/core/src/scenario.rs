//! Scenario files, the headless runner, trajectory logs and replay.
//!
//! A scenario is a JSON document describing the initial swarm, the world,
//! controller parameters and a timeline of commands keyed by tick. Running
//! it produces a trajectory CSV (one row per tick and UAV, starting with the
//! initial state at tick 0) and a metrics summary.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::command::{Action, Command, Mode};
use crate::controller::{ControlParams, CoverageParams, TrackingParams};
use crate::engine::{DispatchCounters, Engine, TickReport, TransitionRecord};
use crate::error::{Error, Result};
use crate::flocking::FlockParams;
use crate::formation::{generate_slots_with, FormationKind, FormationParams, FormationSpec};
use crate::geom::{Aabb, Vec3};
use crate::netproto::{TelemetryPayload, UavTelemetry};
use crate::world::{Limits, Obstacle, SpeedStats, SwarmWorld, UavState};

/// Timeline commands number from here, clear of operator and gesture
/// sequence numbers.
pub const SCRIPT_SEQ_BASE: u64 = 1 << 48;

pub const TRAJECTORY_HEADER: [&str; 10] = ["tick", "t", "id", "x", "y", "z", "vx", "vy", "vz", "group"];

/// Initial UAV placement. Ids are assigned 0..uav_count in generation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// Row-major grid in the horizontal plane starting at `origin`.
    Grid {
        origin: Vec3,
        spacing: f64,
        columns: usize,
        #[serde(default)]
        jitter: f64,
    },
    Circle {
        center: Vec3,
        radius: f64,
        #[serde(default)]
        jitter: f64,
    },
    /// Exactly on the slots of a formation.
    Formation {
        formation: FormationKind,
        center: Vec3,
        #[serde(default)]
        heading: f64,
        scale: f64,
    },
    /// Uniform in a box, rejecting points closer than `min_separation` to an
    /// earlier one. Uses the scenario seed unless `seed` is given.
    Random {
        min: Vec3,
        max: Vec3,
        #[serde(default)]
        min_separation: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Points {
        points: Vec<Vec3>,
    },
}

impl Placement {
    pub fn positions(&self, n: usize, seed: u64, half_angle: f64) -> Result<Vec<Vec3>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jittered = |p: Vec3, j: f64, rng: &mut ChaCha8Rng| {
            if j > 0.0 {
                p + Vec3::new(rng.random_range(-j..=j), rng.random_range(-j..=j), 0.0)
            } else {
                p
            }
        };
        let bad = |m: &str| Err(Error::Scenario(format!("placement: {m}")));
        match self {
            Placement::Grid { origin, spacing, columns, jitter } => {
                if *columns == 0 || !(*spacing > 0.0) || !(*jitter >= 0.0) {
                    return bad("grid needs columns > 0, spacing > 0 and jitter >= 0");
                }
                Ok((0..n)
                    .map(|i| {
                        let p = origin + Vec3::new((i % columns) as f64 * spacing, (i / columns) as f64 * spacing, 0.0);
                        jittered(p, *jitter, &mut rng)
                    })
                    .collect())
            }
            Placement::Circle { center, radius, jitter } => {
                if !(*radius > 0.0) || !(*jitter >= 0.0) {
                    return bad("circle needs radius > 0 and jitter >= 0");
                }
                Ok((0..n)
                    .map(|i| {
                        let a = std::f64::consts::TAU * i as f64 / n as f64;
                        jittered(center + Vec3::new(a.cos(), a.sin(), 0.0) * *radius, *jitter, &mut rng)
                    })
                    .collect())
            }
            Placement::Formation { formation, center, heading, scale } => generate_slots_with(
                &FormationSpec {
                    kind: *formation,
                    center: *center,
                    heading: *heading,
                    scale: *scale,
                    count: n,
                },
                half_angle,
            )
            .map_err(|e| Error::Scenario(format!("placement: {e}"))),
            Placement::Random { min, max, min_separation, seed: own } => {
                if (0..3).any(|i| !(min[i] <= max[i])) || !(*min_separation >= 0.0) {
                    return bad("random needs min <= max and min_separation >= 0");
                }
                if let Some(s) = own {
                    rng = ChaCha8Rng::seed_from_u64(*s);
                }
                let mut out: Vec<Vec3> = Vec::with_capacity(n);
                let mut attempts = 0usize;
                while out.len() < n {
                    attempts += 1;
                    if attempts > 10_000 * n.max(1) {
                        return bad("could not satisfy min_separation");
                    }
                    let p = Vec3::new(
                        rng.random_range(min.x..=max.x),
                        rng.random_range(min.y..=max.y),
                        rng.random_range(min.z..=max.z),
                    );
                    if out.iter().all(|q| (p - q).norm() >= *min_separation) {
                        out.push(p);
                    }
                }
                Ok(out)
            }
            Placement::Points { points } => {
                if points.len() != n {
                    return bad(&format!("{} points given for {n} UAVs", points.len()));
                }
                Ok(points.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineEntry {
    pub tick: u64,
    pub verb: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub args: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<String>,
}

fn default_dt() -> f64 {
    0.02
}

fn default_region() -> Aabb {
    Aabb::new(Vec3::new(-500.0, -500.0, 0.0), Vec3::new(500.0, 500.0, 120.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub uav_count: usize,
    pub placement: Placement,
    #[serde(default = "default_region")]
    pub region: Aabb,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub flocking: FlockParams,
    #[serde(default)]
    pub formation: FormationParams,
    #[serde(default)]
    pub tracking: TrackingParams,
    #[serde(default)]
    pub coverage: CoverageParams,
    /// Mode the controller starts in.
    #[serde(default = "default_mode")]
    pub initial_mode: Mode,
    pub timeline: Vec<TimelineEntry>,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_mode() -> Mode {
    Mode::Navigation
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Scenario::parse(&text).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn duration_ticks(&self) -> u64 {
        (self.duration_s / self.dt).round() as u64
    }

    pub fn control_params(&self) -> ControlParams {
        ControlParams {
            flocking: self.flocking,
            formation: self.formation,
            tracking: self.tracking,
            coverage: self.coverage,
            ..ControlParams::default()
        }
    }

    /// Timeline as commands, numbered from `SCRIPT_SEQ_BASE` in timeline order.
    pub fn commands(&self) -> Result<Vec<Command>> {
        self.timeline
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let action = Action::from_verb(&e.verb, e.args.clone())
                    .map_err(|m| Error::Scenario(format!("timeline[{i}]: {m}")))?;
                Ok(Command::new(SCRIPT_SEQ_BASE + i as u64, e.tick, action))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Scenario(m));
        if self.uav_count == 0 {
            return fail("uav_count must be at least 1".into());
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return fail("duration_s must be positive".into());
        }
        if !(self.dt > 0.0) {
            return fail("dt must be positive".into());
        }
        let ticks = self.duration_ticks();
        if ticks == 0 {
            return fail("duration_s is shorter than one tick".into());
        }
        if let Some((i, e)) = self.timeline.iter().enumerate().find(|(_, e)| e.tick >= ticks) {
            return fail(format!("timeline[{i}] at tick {} is beyond the last tick {}", e.tick, ticks - 1));
        }
        if self.timeline.windows(2).any(|w| w[1].tick < w[0].tick) {
            return fail("timeline must be sorted by tick".into());
        }
        if self.obstacles.iter().any(|o| !(o.radius > 0.0)) {
            return fail("obstacle radius must be positive".into());
        }
        self.commands()?;
        self.control_params().validate()?;
        self.build_world()?;
        Ok(())
    }

    pub fn build_world(&self) -> Result<SwarmWorld> {
        let positions = self
            .placement
            .positions(self.uav_count, self.seed, self.formation.v_half_angle())?;
        if let Some(p) = positions.iter().find(|p| !self.region.contains(p)) {
            return Err(Error::Scenario(format!("initial position {p:?} is outside the region")));
        }
        let uavs = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| UavState::at(i as u32, p))
            .collect();
        Ok(SwarmWorld::new(uavs, self.region, self.dt, self.limits, self.seed)?.with_obstacles(self.obstacles.clone()))
    }

    pub fn build_engine(&self) -> Result<Engine> {
        let mut engine = Engine::new(self.build_world()?, self.control_params())?;
        engine.controller.current_mode = self.initial_mode;
        Ok(engine)
    }
}

/// Metrics summary written next to the trajectory log.
///
/// `duration_s`, `avg_velocity` and the spacing figures cover the window of
/// the latest formation transition (start to completion, or to the end of
/// the run if it never completes); with no transition they cover the whole
/// run. `max_velocity` and `collisions` always cover the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub scenario: String,
    pub seed: u64,
    pub uav_count: usize,
    pub ticks: u64,
    pub dt: f64,
    pub duration_s: f64,
    pub max_velocity: f64,
    pub avg_velocity: f64,
    pub avg_spacing_error: f64,
    pub max_spacing_error: f64,
    pub collisions: u64,
    /// Whether every recorded transition completed.
    pub completed: bool,
    pub window_start_tick: u64,
    pub window_end_tick: u64,
    pub transitions: Vec<TransitionRecord>,
    pub commands: DispatchCounters,
}

/// Step-by-step scenario execution.
pub struct ScenarioRun {
    scenario: Scenario,
    engine: Engine,
    commands: Vec<Command>,
    next_command: usize,
    end_tick: u64,
    // indexed by tick - 1
    speeds: Vec<SpeedStats>,
    spacing: Vec<Option<f64>>,
}

impl ScenarioRun {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        Ok(Self {
            engine: scenario.build_engine()?,
            commands: scenario.commands()?,
            next_command: 0,
            end_tick: scenario.duration_ticks(),
            speeds: Vec::new(),
            spacing: Vec::new(),
            scenario: scenario.clone(),
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    /// For injecting commands from outside the timeline.
    pub fn engine_mut(&mut self) -> &mut Engine {
        &mut self.engine
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Lets the run continue past the scenario duration until stopped.
    pub fn set_open_ended(&mut self) {
        self.end_tick = u64::MAX;
    }

    pub fn is_finished(&self) -> bool {
        self.engine.world.tick >= self.end_tick
    }

    /// Submits the commands due at the current tick and advances one tick.
    /// Returns `None` once the scenario duration has elapsed.
    pub fn step(&mut self) -> Result<Option<TickReport>> {
        if self.is_finished() {
            return Ok(None);
        }
        let now = self.engine.world.tick;
        while let Some(cmd) = self.commands.get(self.next_command).filter(|c| c.issued_tick <= now) {
            self.engine.submit(cmd.clone());
            self.next_command += 1;
        }
        let report = self.engine.tick()?;
        self.speeds.push(SpeedStats::of(&self.engine.world.uavs).unwrap_or(SpeedStats {
            min: 0.0,
            mean: 0.0,
            max: 0.0,
        }));
        self.spacing.push(self.engine.current_spacing_error());
        Ok(Some(report))
    }

    pub fn metrics(&self) -> RunMetrics {
        let engine = &self.engine;
        let now = engine.world.tick;
        let latest = engine.transitions.iter().map(|r| r.started_tick).max();
        let (start, end) = match latest {
            Some(s) => {
                let end = engine
                    .transitions
                    .iter()
                    .filter(|r| r.started_tick == s)
                    .map(|r| r.completed_tick.unwrap_or(now))
                    .max()
                    .unwrap_or(now);
                (s, end)
            }
            None => (0, now),
        };
        // states after the steps start+1..=end
        let window = start as usize..end as usize;
        let speeds = &self.speeds[window.clone()];
        let spacing: Vec<f64> = self.spacing[window].iter().flatten().copied().collect();
        let mean = |v: &mut dyn Iterator<Item = f64>| {
            let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
            if n == 0 {
                0.0
            } else {
                s / n as f64
            }
        };
        RunMetrics {
            scenario: self.scenario.name.clone(),
            seed: self.scenario.seed,
            uav_count: engine.world.uavs.len(),
            ticks: now,
            dt: engine.world.dt,
            duration_s: (end - start) as f64 * engine.world.dt,
            max_velocity: self.speeds.iter().map(|s| s.max).fold(0.0, f64::max),
            avg_velocity: mean(&mut speeds.iter().map(|s| s.mean)),
            avg_spacing_error: mean(&mut spacing.iter().copied()),
            max_spacing_error: spacing.iter().copied().fold(0.0, f64::max),
            collisions: engine.world.metrics.collision_count,
            completed: engine.transitions.iter().all(|r| r.completed_tick.is_some()),
            window_start_tick: start,
            window_end_tick: end,
            transitions: engine.transitions.clone(),
            commands: engine.counters,
        }
    }
}

/// Writes one trajectory row per UAV for the engine's current tick.
pub fn write_rows<W: Write>(w: &mut csv::Writer<W>, world: &SwarmWorld) -> Result<()> {
    let t = world.time();
    for u in &world.uavs {
        let p = u.position;
        let v = u.velocity;
        w.write_record([
            world.tick.to_string(),
            t.to_string(),
            u.id.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.z.to_string(),
            v.x.to_string(),
            v.y.to_string(),
            v.z.to_string(),
            u.group_id.to_string(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(())
}

/// Runs a scenario to completion, writing the trajectory log to `out`.
pub fn run_scenario<W: Write>(scenario: &Scenario, out: W) -> Result<RunMetrics> {
    let mut run = ScenarioRun::new(scenario)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER).map_err(|e| Error::Io(e.to_string()))?;
    write_rows(&mut w, &run.engine().world)?;
    while run.step()?.is_some() {
        write_rows(&mut w, &run.engine().world)?;
    }
    w.flush()?;
    Ok(run.metrics())
}

/// All UAV states at one logged tick.
#[derive(Debug, Clone, PartialEq)]
pub struct LogFrame {
    pub tick: u64,
    pub t: f64,
    pub uavs: Vec<UavTelemetry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub frames: Vec<LogFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub ticks: u64,
    pub uav_count: usize,
    pub duration_s: f64,
    pub max_velocity: f64,
    pub avg_velocity: f64,
    pub collisions: u64,
}

impl TrajectoryLog {
    pub fn read<R: Read>(input: R) -> Result<TrajectoryLog> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers().map_err(|e| Error::Log(e.to_string()))?.clone();
        if header.is_empty() {
            return Err(Error::Log("trajectory log is empty".into()));
        }
        if header.iter().collect::<Vec<_>>() != TRAJECTORY_HEADER {
            return Err(Error::Log(format!("unexpected header, expected {}", TRAJECTORY_HEADER.join(","))));
        }
        let mut frames: Vec<LogFrame> = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Log(format!("line {line}: {e}")))?;
            let f = |k: usize| -> Result<f64> {
                let v: f64 = rec[k]
                    .parse()
                    .map_err(|_| Error::Log(format!("line {line}: bad {} value {:?}", TRAJECTORY_HEADER[k], &rec[k])))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Log(format!("line {line}: non-finite {}", TRAJECTORY_HEADER[k])))
                }
            };
            let int = |k: usize| -> Result<u64> {
                rec[k]
                    .parse()
                    .map_err(|_| Error::Log(format!("line {line}: bad {} value {:?}", TRAJECTORY_HEADER[k], &rec[k])))
            };
            let tick = int(0)?;
            let uav = UavTelemetry {
                id: u32::try_from(int(2)?).map_err(|_| Error::Log(format!("line {line}: id out of range")))?,
                position: Vec3::new(f(3)?, f(4)?, f(5)?),
                velocity: Vec3::new(f(6)?, f(7)?, f(8)?),
                group: u32::try_from(int(9)?).map_err(|_| Error::Log(format!("line {line}: group out of range")))?,
            };
            match frames.last_mut() {
                Some(fr) if fr.tick == tick => fr.uavs.push(uav),
                Some(fr) if tick != fr.tick + 1 => {
                    return Err(Error::Log(format!("line {line}: tick {tick} follows tick {}", fr.tick)));
                }
                _ => frames.push(LogFrame { tick, t: f(1)?, uavs: vec![uav] }),
            }
        }
        if frames.is_empty() {
            return Err(Error::Log("trajectory log is empty".into()));
        }
        let ids = |fr: &LogFrame| fr.uavs.iter().map(|u| u.id).collect::<Vec<_>>();
        let first = ids(&frames[0]);
        if first.iter().collect::<BTreeSet<_>>().len() != first.len() {
            return Err(Error::Log(format!("tick {}: duplicate UAV id", frames[0].tick)));
        }
        if let Some(fr) = frames.iter().find(|fr| ids(fr) != first) {
            return Err(Error::Log(format!("tick {}: UAV set differs from the first tick", fr.tick)));
        }
        Ok(TrajectoryLog { frames })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrajectoryLog> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        TrajectoryLog::read(std::io::BufReader::new(file))
    }

    /// Collision events per frame, edge-triggered like the live world: pairs
    /// already closer than `d_col` in the first frame are not counted.
    pub fn collision_series(&self, d_col: f64) -> Vec<u64> {
        let close = |fr: &LogFrame| {
            let mut s = BTreeSet::new();
            for (i, a) in fr.uavs.iter().enumerate() {
                for b in &fr.uavs[i + 1..] {
                    if (a.position - b.position).norm() < d_col {
                        s.insert((a.id.min(b.id), a.id.max(b.id)));
                    }
                }
            }
            s
        };
        let mut prev = close(&self.frames[0]);
        let mut out = vec![0];
        for fr in &self.frames[1..] {
            let now = close(fr);
            out.push(now.difference(&prev).count() as u64);
            prev = now;
        }
        out
    }

    /// Recomputes run-wide metrics. Speed statistics skip the initial frame,
    /// matching the live run which samples after each step.
    pub fn summary(&self, d_col: f64) -> ReplaySummary {
        let stepped = &self.frames[1..];
        let speeds: Vec<SpeedStats> = stepped
            .iter()
            .map(|fr| {
                let n = fr.uavs.len() as f64;
                let s: Vec<f64> = fr.uavs.iter().map(|u| u.velocity.norm()).collect();
                SpeedStats {
                    min: s.iter().copied().fold(f64::INFINITY, f64::min),
                    mean: s.iter().sum::<f64>() / n,
                    max: s.iter().copied().fold(0.0, f64::max),
                }
            })
            .collect();
        let last = self.frames.last().expect("log is non-empty");
        ReplaySummary {
            ticks: last.tick - self.frames[0].tick,
            uav_count: self.frames[0].uavs.len(),
            duration_s: last.t - self.frames[0].t,
            max_velocity: speeds.iter().map(|s| s.max).fold(0.0, f64::max),
            avg_velocity: if speeds.is_empty() {
                0.0
            } else {
                speeds.iter().map(|s| s.mean).sum::<f64>() / speeds.len() as f64
            },
            collisions: self.collision_series(d_col).iter().sum(),
        }
    }

    /// Telemetry for a replayed frame. The log carries no controller state,
    /// so mode is reported as Navigation and groups, echo and counters are
    /// empty.
    pub fn telemetry(&self, index: usize, collisions_so_far: u64) -> TelemetryPayload {
        let fr = &self.frames[index];
        TelemetryPayload {
            snapshot_tick: fr.tick,
            time_s: fr.t,
            size: fr.uavs.len(),
            mode: Mode::Navigation,
            formation: None,
            collisions: collisions_so_far,
            groups: Vec::new(),
            uavs: fr.uavs.clone(),
            last_echo: None,
            counters: DispatchCounters::default(),
            recognition: None,
            part: 1,
            total: 1,
        }
    }
}
