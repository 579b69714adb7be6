//! Tick loop: drains the command inbox, plans per group, composes one
//! velocity per UAV and steps the world.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::command::{Command, CommandQueue};
use crate::controller::{Activity, ControlParams, ControllerState, DispatchStatus, Echo};
use crate::error::{Error, Result};
use crate::flocking::{
    alignment_velocity, cohesion_velocity, combine_velocity, half_spring_repulsion, migration_velocity,
    obstacle_avoidance_velocity, separation_velocity,
};
use crate::formation::{formation_velocity, FormationKind};
use crate::geom::Vec3;
use crate::tasks::update_tracking;
use crate::world::{SwarmWorld, UavState};

pub const INBOX_CAPACITY: usize = 1024;

/// One formation transition, from the tick its plan was created to the
/// tick it settled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub group: u32,
    pub kind: FormationKind,
    pub started_tick: u64,
    pub completed_tick: Option<u64>,
}

impl TransitionRecord {
    pub fn duration_ticks(&self) -> Option<u64> {
        self.completed_tick.map(|c| c - self.started_tick)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchCounters {
    pub accepted: u64,
    pub rejected: u64,
    pub duplicate: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub tick: u64,
    pub echoes: Vec<Echo>,
    pub new_collisions: u64,
}

#[derive(Debug, Clone)]
pub struct Engine {
    pub world: SwarmWorld,
    pub controller: ControllerState,
    inbox: CommandQueue,
    pub last_echo: Option<Echo>,
    pub counters: DispatchCounters,
    pub transitions: Vec<TransitionRecord>,
    /// Feedforward velocity of each group whose formation center is moving.
    feed: BTreeMap<u32, Vec3>,
}

impl Engine {
    pub fn new(world: SwarmWorld, params: ControlParams) -> Result<Self> {
        params.validate()?;
        let controller = ControllerState::new(&world, params);
        let mut e = Self {
            world,
            controller,
            inbox: CommandQueue::new(INBOX_CAPACITY),
            last_echo: None,
            counters: DispatchCounters::default(),
            transitions: Vec::new(),
            feed: BTreeMap::new(),
        };
        e.sync_world_tags();
        Ok(e)
    }

    /// Queues a command for the next tick. Returns the command evicted to
    /// make room, if any.
    pub fn submit(&mut self, cmd: Command) -> Option<Command> {
        let dropped = self.inbox.push(cmd);
        if dropped.is_some() {
            self.counters.dropped += 1;
        }
        dropped
    }

    pub fn pending(&self) -> usize {
        self.inbox.len()
    }

    /// Dispatches one command immediately, outside the tick cycle.
    pub fn dispatch_now(&mut self, cmd: &Command) -> Echo {
        let echo = self.controller.dispatch(&self.world, cmd);
        self.note_echo(&echo);
        self.record_transitions();
        self.sync_world_tags();
        echo
    }

    fn note_echo(&mut self, echo: &Echo) {
        match echo.status {
            DispatchStatus::Accepted => self.counters.accepted += 1,
            DispatchStatus::Rejected => {
                log::info!("command {} ({}) rejected: {}", echo.seq, echo.verb, echo.reason.as_deref().unwrap_or(""));
                self.counters.rejected += 1
            }
            DispatchStatus::Duplicate => self.counters.duplicate += 1,
        }
        self.last_echo = Some(echo.clone());
    }

    pub fn tick(&mut self) -> Result<TickReport> {
        let mut echoes = Vec::new();
        for cmd in self.inbox.drain() {
            let echo = self.controller.dispatch(&self.world, &cmd);
            self.note_echo(&echo);
            echoes.push(echo);
        }
        self.record_transitions();
        self.plan()?;
        self.sync_world_tags();
        let commanded = self.commanded_velocities()?;
        let halted: BTreeSet<u32> = self
            .controller
            .groups
            .values()
            .filter(|g| g.activity == Activity::Halted)
            .flat_map(|g| g.members.iter().copied())
            .collect();
        self.world.halt(&halted);
        let report = self.world.step(&commanded)?;
        self.after_step();
        Ok(TickReport {
            tick: report.tick,
            echoes,
            new_collisions: report.new_collisions,
        })
    }

    /// Per-group high-level planning that depends on the current world.
    fn plan(&mut self) -> Result<()> {
        let speed = self.controller.params.flocking.v_mig;
        let dt = self.world.dt;
        self.feed.clear();
        for g in self.controller.groups.values_mut() {
            match &mut g.activity {
                Activity::Track(run) => {
                    let d = update_tracking(&self.world, &run.trackers, &run.task, run.engaged)?;
                    run.engaged = d.engaged;
                    run.desired = d.desired;
                }
                Activity::Formation(plan) => {
                    let Some(goal) = plan.goal else { continue };
                    let (delta, arrived) = advance(plan.spec.center, goal, speed * dt);
                    plan.translate(delta);
                    if arrived {
                        plan.goal = None;
                    }
                    self.feed.insert(g.id, delta / dt);
                }
                Activity::Search(run) => {
                    if !run.plan.is_complete() || run.finished() {
                        continue;
                    }
                    let (delta, arrived) = advance(run.plan.spec.center, run.waypoints[run.next], speed * dt);
                    if arrived {
                        run.next += 1;
                    }
                    run.plan.translate(delta);
                    self.feed.insert(g.id, delta / dt);
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Desired point for a UAV under its group's activity, if it has one.
    fn target_of(&self, activity: &Activity, id: u32) -> Option<Vec3> {
        match activity {
            Activity::Formation(plan) => plan.slot_of(id).map(|s| s.1),
            Activity::Search(run) => run.plan.slot_of(id).map(|s| s.1),
            Activity::Coverage(run) => run.targets.get(&id).copied(),
            Activity::Track(run) => match &run.desired {
                Some(desired) if run.engaged => {
                    let i = run.trackers.iter().position(|t| *t == id)?;
                    Some(desired[i])
                }
                _ => self.target_of(&run.prior, id),
            },
            _ => None,
        }
    }

    fn activity_velocity(&self, activity: &Activity, gid: u32, me: &UavState, members: &[u32]) -> Vec3 {
        let p = &self.controller.params;
        match activity {
            Activity::Hover | Activity::Halted => Vec3::zeros(),
            Activity::Landing => Vec3::new(0.0, 0.0, -p.landing_speed),
            Activity::Migrate { targets } => {
                let Some(target) = targets.get(&me.id) else {
                    return Vec3::zeros();
                };
                let neighbors: Vec<&UavState> = members
                    .iter()
                    .filter(|m| **m != me.id)
                    .filter_map(|m| self.world.uav(*m))
                    .collect();
                let f = &p.flocking;
                // constant cruise, then proportional capture near the target
                let seek = if (target - me.position).norm() > f.v_mig / p.formation.k_f {
                    migration_velocity(me, target, f)
                } else {
                    formation_velocity(me, target, p.formation.k_f)
                };
                seek + separation_velocity(me, neighbors.iter().copied(), f)
                    + cohesion_velocity(me, neighbors.iter().copied(), f)
                    + alignment_velocity(me, neighbors.iter().copied(), f)
            }
            Activity::Track(run) if !run.engaged || !run.trackers.contains(&me.id) => {
                if run.trackers.contains(&me.id) {
                    self.activity_velocity(&run.prior, gid, me, members)
                } else {
                    Vec3::zeros()
                }
            }
            Activity::Formation(_) | Activity::Search(_) | Activity::Coverage(_) | Activity::Track(_) => {
                let Some(slot) = self.target_of(activity, me.id) else {
                    return Vec3::zeros();
                };
                let feed = self.feed.get(&gid).copied().unwrap_or_else(Vec3::zeros);
                formation_velocity(me, &slot, p.formation.k_f) + feed
            }
        }
    }

    /// Velocity command per UAV, in world order, for the current state.
    pub fn commanded_velocities(&self) -> Result<Vec<Vec3>> {
        let p = &self.controller.params;
        let mut out = Vec::with_capacity(self.world.uavs.len());
        for me in &self.world.uavs {
            let gid = self.controller.group_of(me.id).ok_or(Error::UnknownUav(me.id))?;
            let g = &self.controller.groups[&gid];
            if g.activity == Activity::Halted {
                out.push(Vec3::zeros());
                continue;
            }
            let mut terms = vec![self.activity_velocity(&g.activity, gid, me, &g.members)];
            if p.flocking.repulsion_enabled {
                let others = self.world.uavs.iter().filter(|u| u.id != me.id);
                terms.push(half_spring_repulsion(me, others, &p.flocking));
            }
            terms.push(obstacle_avoidance_velocity(me, &self.world.obstacles, &p.flocking));
            out.push(combine_velocity(&terms, self.world.limits.v_max));
        }
        Ok(out)
    }

    fn after_step(&mut self) {
        let fp = self.controller.params.formation;
        for g in self.controller.groups.values_mut() {
            match &mut g.activity {
                Activity::Formation(plan) => {
                    plan.update(&self.world, &fp);
                }
                Activity::Search(run) => {
                    run.plan.update(&self.world, &fp);
                }
                Activity::Migrate { targets } => {
                    let arrived = targets.iter().all(|(id, t)| {
                        self.world
                            .uav(*id)
                            .is_some_and(|u| (u.position - t).norm() <= crate::flocking::MIGRATION_ARRIVAL_RADIUS)
                    });
                    if arrived {
                        log::debug!("group {} arrived", g.id);
                    }
                }
                _ => {}
            }
        }
        self.record_transitions();
        if let Some(e) = self.current_spacing_error() {
            self.world.metrics.spacing_error_series.push(e);
        }
        self.world.metrics.duration = self.duration();
        self.sync_world_tags();
    }

    /// Mean distance to the assigned point over every UAV that has one.
    pub fn current_spacing_error(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for g in self.controller.groups.values() {
            for id in &g.members {
                if let (Some(t), Some(u)) = (self.target_of(&g.activity, *id), self.world.uav(*id)) {
                    sum += (u.position - t).norm();
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    fn record_transitions(&mut self) {
        for g in self.controller.groups.values() {
            let plan = match &g.activity {
                Activity::Formation(plan) => plan,
                Activity::Search(run) => &run.plan,
                _ => continue,
            };
            let rec = TransitionRecord {
                group: g.id,
                kind: plan.spec.kind,
                started_tick: plan.started_tick,
                completed_tick: plan.completed_tick,
            };
            match self
                .transitions
                .iter_mut()
                .find(|r| r.group == g.id && r.started_tick == plan.started_tick)
            {
                Some(r) => *r = rec,
                None => self.transitions.push(rec),
            }
        }
    }

    /// Length of the latest formation transition in seconds, or elapsed time
    /// when there has been none. An unfinished transition counts up to now.
    pub fn duration(&self) -> f64 {
        let latest = self.transitions.iter().max_by_key(|r| r.started_tick);
        match latest {
            None => self.world.time(),
            Some(r) => {
                let end = r.completed_tick.unwrap_or(self.world.tick);
                self.transitions
                    .iter()
                    .filter(|o| o.started_tick == r.started_tick)
                    .map(|o| o.completed_tick.unwrap_or(self.world.tick))
                    .max()
                    .unwrap_or(end)
                    .saturating_sub(r.started_tick) as f64
                    * self.world.dt
            }
        }
    }

    fn sync_world_tags(&mut self) {
        let mut tags: BTreeMap<u32, (u32, Option<usize>)> = BTreeMap::new();
        for g in self.controller.groups.values() {
            let plan = match &g.activity {
                Activity::Formation(plan) => Some(plan),
                Activity::Search(run) => Some(&run.plan),
                _ => None,
            };
            for id in &g.members {
                tags.insert(*id, (g.id, plan.and_then(|p| p.slot_of(*id)).map(|s| s.0)));
            }
        }
        for u in &mut self.world.uavs {
            if let Some((gid, slot)) = tags.get(&u.id) {
                u.group_id = *gid;
                u.slot_index = *slot;
            }
        }
    }

    /// Formation kind of the lowest-numbered group that has one.
    pub fn active_formation(&self) -> Option<FormationKind> {
        self.controller.groups.values().find_map(|g| g.formation.map(|f| f.kind))
    }
}

/// Step of at most `step` from `from` toward `to`, and whether it arrives.
fn advance(from: Vec3, to: Vec3, step: f64) -> (Vec3, bool) {
    let diff = to - from;
    let d = diff.norm();
    if d <= step {
        (diff, true)
    } else {
        (diff * (step / d), false)
    }
}
