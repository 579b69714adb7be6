//! Coordination layer: operating mode, priority dispatch, grouping and task
//! allocation.
//!
//! Global commands run in every mode. Local commands run only when their
//! mode equals the current mode. A command that is rejected leaves the
//! state untouched; an executed command's seq is remembered so a replay is
//! ignored.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::command::{Action, Command, Mode, Scope, SeqWindow};
use crate::error::{Error, Result};
use crate::flocking::FlockParams;
use crate::formation::{switch_formation, FormationKind, FormationParams, FormationSpec, TransitionPlan};
use crate::geom::{centroid, Vec2, Vec3};
use crate::grouping::kmeans_partition;
use crate::tasks::{lloyd_relax, plan_area_search, CoverageTask, SearchTask, TaskSpec, TrackTask};
use crate::world::SwarmWorld;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackingParams {
    pub perception_range: f64,
    pub standoff_radius: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            perception_range: 150.0,
            standoff_radius: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageParams {
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for CoverageParams {
    fn default() -> Self {
        Self {
            tolerance: 0.05,
            max_iters: 200,
        }
    }
}

/// Tunable gains and defaults; adjustable at runtime through `set_param`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlParams {
    pub flocking: FlockParams,
    pub formation: FormationParams,
    pub tracking: TrackingParams,
    pub coverage: CoverageParams,
    /// Descent speed while landing, m/s.
    pub landing_speed: f64,
    /// Default travel distance for `move_dir`, m.
    pub move_distance: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            flocking: FlockParams::default(),
            formation: FormationParams::default(),
            tracking: TrackingParams::default(),
            coverage: CoverageParams::default(),
            landing_speed: 2.0,
            move_distance: 20.0,
        }
    }
}

impl ControlParams {
    pub fn validate(&self) -> Result<()> {
        self.flocking.validate()?;
        let f = &self.formation;
        if !(f.k_f > 0.0
            && f.completion_tolerance > 0.0
            && f.circle_radius > 0.0
            && f.line_spacing > 0.0
            && f.v_spacing > 0.0
            && f.expand_factor > 0.0
            && f.v_half_angle_deg > 0.0
            && f.v_half_angle_deg < 90.0)
        {
            return Err(Error::InvalidParameter("formation parameters out of range".into()));
        }
        if !(self.tracking.standoff_radius > 0.0 && self.tracking.perception_range > self.tracking.standoff_radius) {
            return Err(Error::InvalidParameter("tracking parameters out of range".into()));
        }
        if !(self.coverage.tolerance > 0.0 && self.landing_speed > 0.0 && self.move_distance > 0.0) {
            return Err(Error::InvalidParameter("parameters must be positive".into()));
        }
        Ok(())
    }

    /// Sets a numeric field addressed by a dotted path such as
    /// `flocking.c_sep`. Boolean fields take `value != 0`.
    pub fn set(&self, path: &str, value: f64) -> Result<ControlParams> {
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!("{path}: value must be finite")));
        }
        let mut tree = serde_json::to_value(self).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let pointer = format!("/{}", path.replace('.', "/"));
        let slot = tree
            .pointer_mut(&pointer)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown parameter {path}")))?;
        *slot = match slot {
            serde_json::Value::Bool(_) => serde_json::Value::Bool(value != 0.0),
            serde_json::Value::Number(n) if n.is_u64() => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!("{path} needs a non-negative integer")));
                }
                serde_json::json!(value as u64)
            }
            serde_json::Value::Number(_) => serde_json::json!(value),
            _ => return Err(Error::InvalidParameter(format!("{path} is not a numeric parameter"))),
        };
        let next: ControlParams =
            serde_json::from_value(tree).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        next.validate()?;
        Ok(next)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRun {
    pub task: SearchTask,
    pub waypoints: Vec<Vec3>,
    /// Index of the waypoint the formation center is heading to.
    pub next: usize,
    pub plan: TransitionPlan,
}

impl SearchRun {
    pub fn finished(&self) -> bool {
        self.next >= self.waypoints.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRun {
    pub task: TrackTask,
    pub trackers: Vec<u32>,
    pub engaged: bool,
    /// What the trackers keep doing until the target is detected.
    pub prior: Box<Activity>,
    /// Standoff point per tracker, aligned with `trackers`, once engaged.
    pub desired: Option<Vec<Vec3>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRun {
    pub task: CoverageTask,
    pub targets: BTreeMap<u32, Vec3>,
    pub iterations: usize,
    pub converged: bool,
}

/// What a group is currently doing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "activity", rename_all = "snake_case")]
pub enum Activity {
    Hover,
    Migrate { targets: BTreeMap<u32, Vec3> },
    Formation(TransitionPlan),
    Search(SearchRun),
    Track(TrackRun),
    Coverage(CoverageRun),
    Landing,
    Halted,
}

impl Activity {
    pub fn name(&self) -> &'static str {
        match self {
            Activity::Hover => "hover",
            Activity::Migrate { .. } => "migrate",
            Activity::Formation(_) => "formation",
            Activity::Search(_) => "search",
            Activity::Track(_) => "track",
            Activity::Coverage(_) => "coverage",
            Activity::Landing => "landing",
            Activity::Halted => "halted",
        }
    }

    pub fn task_name(&self) -> Option<&'static str> {
        match self {
            Activity::Search(_) => Some("search"),
            Activity::Track(_) => Some("track"),
            Activity::Coverage(_) => Some("coverage"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub id: u32,
    /// Sorted member ids.
    pub members: Vec<u32>,
    pub formation: Option<FormationSpec>,
    pub activity: Activity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispatchStatus {
    Accepted,
    Rejected,
    Duplicate,
}

/// Result of dispatching one command; echoed to telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Echo {
    pub seq: u64,
    pub verb: String,
    pub status: DispatchStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Echo {
    pub fn is_accepted(&self) -> bool {
        self.status == DispatchStatus::Accepted
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub current_mode: Mode,
    pub groups: BTreeMap<u32, Group>,
    pub params: ControlParams,
    executed: SeqWindow,
}

impl ControllerState {
    /// One group (id 1) holding every UAV, hovering, in Navigation mode.
    pub fn new(world: &SwarmWorld, params: ControlParams) -> Self {
        let mut members = world.ids();
        members.sort_unstable();
        let mut groups = BTreeMap::new();
        groups.insert(
            1,
            Group {
                id: 1,
                members,
                formation: None,
                activity: Activity::Hover,
            },
        );
        Self {
            current_mode: Mode::Navigation,
            groups,
            params,
            executed: SeqWindow::new(SeqWindow::DEFAULT_CAPACITY),
        }
    }

    pub fn group_of(&self, uav: u32) -> Option<u32> {
        self.groups
            .values()
            .find(|g| g.members.binary_search(&uav).is_ok())
            .map(|g| g.id)
    }

    pub fn has_executed(&self, seq: u64) -> bool {
        self.executed.contains(seq)
    }

    /// Applies one command.
    pub fn dispatch(&mut self, world: &SwarmWorld, cmd: &Command) -> Echo {
        let echo = |status, reason: Option<String>| Echo {
            seq: cmd.seq,
            verb: cmd.verb().to_string(),
            status,
            reason,
        };
        if self.executed.contains(cmd.seq) {
            return echo(DispatchStatus::Duplicate, Some("sequence number already executed".into()));
        }
        if let Err(reason) = cmd.validate() {
            return echo(DispatchStatus::Rejected, Some(format!("malformed: {reason}")));
        }
        if cmd.scope == Scope::Local && cmd.mode != self.current_mode {
            return echo(
                DispatchStatus::Rejected,
                Some(format!(
                    "mode mismatch: {} is a {} command, current mode is {}",
                    cmd.verb(),
                    cmd.mode.name(),
                    self.current_mode.name()
                )),
            );
        }
        // work on a copy so a failing command leaves no partial update
        let mut next = self.clone();
        match next.execute(world, &cmd.action) {
            Ok(()) => {
                next.executed.insert(cmd.seq);
                *self = next;
                echo(DispatchStatus::Accepted, None)
            }
            Err(e) => echo(DispatchStatus::Rejected, Some(e.to_string())),
        }
    }

    fn execute(&mut self, world: &SwarmWorld, action: &Action) -> Result<()> {
        match action {
            Action::EmergencyStop {} => {
                self.set_all(Activity::Halted);
                Ok(())
            }
            Action::Land {} => {
                self.set_all(Activity::Landing);
                Ok(())
            }
            Action::Hold {} => {
                self.set_all(Activity::Hover);
                Ok(())
            }
            Action::SwitchMode { mode } => {
                self.current_mode = *mode;
                Ok(())
            }
            Action::MoveDir {
                direction,
                distance,
                group,
            } => {
                let norm = direction.norm();
                if !(norm > 0.0) || !norm.is_finite() {
                    return Err(Error::InvalidParameter("move direction must be non-zero".into()));
                }
                let dist = distance.unwrap_or(self.params.move_distance);
                if !(dist > 0.0) {
                    return Err(Error::InvalidParameter("move distance must be positive".into()));
                }
                let offset = direction / norm * dist;
                for gid in self.target_groups(*group)? {
                    let g = self.groups.get_mut(&gid).ok_or(Error::UnknownGroup(gid))?;
                    // a group in formation carries its formation along
                    if let Activity::Formation(plan) = &mut g.activity {
                        plan.goal = Some(plan.goal.unwrap_or(plan.spec.center) + offset);
                        if plan.is_complete() {
                            plan.started_tick = world.tick;
                            plan.completed_tick = None;
                        }
                        continue;
                    }
                    let targets = g
                        .members
                        .iter()
                        .map(|id| Ok((*id, position(world, *id)? + offset)))
                        .collect::<Result<BTreeMap<_, _>>>()?;
                    g.activity = Activity::Migrate { targets };
                }
                Ok(())
            }
            Action::SetFormation {
                kind,
                scale,
                heading,
                center,
                group,
            } => {
                for gid in self.target_groups(*group)? {
                    let g = &self.groups[&gid];
                    let spec = FormationSpec {
                        kind: *kind,
                        center: match center {
                            Some(c) => *c,
                            None => group_centroid(world, &g.members)?,
                        },
                        heading: heading
                            .or(g.formation.map(|f| f.heading))
                            .unwrap_or(0.0),
                        scale: scale.unwrap_or(self.params.formation.default_scale(*kind)),
                        count: g.members.len(),
                    };
                    self.form(world, gid, spec)?;
                }
                Ok(())
            }
            Action::Expand { factor, group } => {
                let factor = factor.unwrap_or(self.params.formation.expand_factor);
                if !(factor > 0.0) {
                    return Err(Error::InvalidParameter("expand factor must be positive".into()));
                }
                for gid in self.target_groups(*group)? {
                    let g = &self.groups[&gid];
                    let mut spec = g
                        .formation
                        .ok_or_else(|| Error::InvalidParameter(format!("group {gid} has no formation to expand")))?;
                    spec.scale *= factor;
                    spec.count = g.members.len();
                    self.form(world, gid, spec)?;
                }
                Ok(())
            }
            Action::Split { k } | Action::SetGroupCount { count: k } => self.split_groups(world, *k),
            Action::Merge { groups } => self.merge_groups(world, groups),
            Action::StartSearch {
                center,
                radius,
                lane_spacing,
                formation,
                group,
            } => {
                let gid = self.task_group(*group)?;
                let task = SearchTask {
                    center: *center,
                    radius: *radius,
                    lane_spacing: *lane_spacing,
                    formation: formation
                        .or(self.groups[&gid].formation.map(|f| f.kind))
                        .unwrap_or(FormationKind::Line),
                };
                self.allocate_task(world, gid, TaskSpec::Search(task))
            }
            Action::StartTrack {
                target_id,
                perception_range,
                standoff_radius,
                group,
            } => {
                let gid = self.task_group(*group)?;
                let task = TrackTask {
                    target_id: *target_id,
                    perception_range: perception_range.unwrap_or(self.params.tracking.perception_range),
                    standoff_radius: standoff_radius.unwrap_or(self.params.tracking.standoff_radius),
                };
                self.allocate_task(world, gid, TaskSpec::Track(task))
            }
            Action::StartCoverage {
                region,
                tolerance,
                max_iters,
                altitude,
                group,
            } => {
                let gid = self.task_group(*group)?;
                let alt = match altitude {
                    Some(a) => *a,
                    None => group_centroid(world, &self.groups[&gid].members)?.z,
                };
                let task = CoverageTask {
                    region: *region,
                    tolerance: tolerance.unwrap_or(self.params.coverage.tolerance),
                    max_iters: max_iters.unwrap_or(self.params.coverage.max_iters),
                    altitude: alt,
                };
                self.allocate_task(world, gid, TaskSpec::Coverage(task))
            }
            Action::SetParam { path, value } => {
                self.params = self.params.set(path, *value)?;
                Ok(())
            }
        }
    }

    fn set_all(&mut self, activity: Activity) {
        for g in self.groups.values_mut() {
            g.activity = activity.clone();
        }
    }

    fn target_groups(&self, group: Option<u32>) -> Result<Vec<u32>> {
        match group {
            Some(id) if self.groups.contains_key(&id) => Ok(vec![id]),
            Some(id) => Err(Error::UnknownGroup(id)),
            None => Ok(self.groups.keys().copied().collect()),
        }
    }

    fn task_group(&self, group: Option<u32>) -> Result<u32> {
        match group {
            Some(id) if self.groups.contains_key(&id) => Ok(id),
            Some(id) => Err(Error::UnknownGroup(id)),
            None => self.groups.keys().next().copied().ok_or(Error::UnknownGroup(1)),
        }
    }

    fn form(&mut self, world: &SwarmWorld, gid: u32, spec: FormationSpec) -> Result<()> {
        let g = self.groups.get_mut(&gid).ok_or(Error::UnknownGroup(gid))?;
        let mut plan = switch_formation(world, &g.members, spec, &self.params.formation)?;
        if let Activity::Formation(prev) = &g.activity {
            if prev.goal.is_some() {
                plan.goal = prev.goal;
                plan.completed_tick = None;
            }
        }
        g.formation = Some(spec);
        g.activity = Activity::Formation(plan);
        Ok(())
    }

    fn default_kind(&self) -> FormationKind {
        self.groups
            .values()
            .find_map(|g| g.formation.map(|f| f.kind))
            .unwrap_or(FormationKind::Circle)
    }

    /// Re-partitions the whole swarm into `k` groups by k-means on current
    /// positions; each new group forms up around its own centroid.
    pub fn split_groups(&mut self, world: &SwarmWorld, k: usize) -> Result<()> {
        let n = world.uavs.len();
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "cannot split {n} UAVs into {k} groups"
            )));
        }
        let points: Vec<(u32, Vec3)> = world.uavs.iter().map(|u| (u.id, u.position)).collect();
        let clusters = kmeans_partition(&points, k);
        let kind = self.default_kind();
        let heading = self.groups.values().find_map(|g| g.formation.map(|f| f.heading)).unwrap_or(0.0);
        let scale = self.params.formation.default_scale(kind);
        let mut groups = BTreeMap::new();
        for (i, members) in clusters.into_iter().enumerate() {
            let id = i as u32 + 1;
            let spec = FormationSpec {
                kind,
                center: group_centroid(world, &members)?,
                heading,
                scale,
                count: members.len(),
            };
            let plan = switch_formation(world, &members, spec, &self.params.formation)?;
            groups.insert(
                id,
                Group {
                    id,
                    members,
                    formation: Some(spec),
                    activity: Activity::Formation(plan),
                },
            );
        }
        self.groups = groups;
        Ok(())
    }

    /// Unions the listed groups into the lowest id and re-forms it.
    pub fn merge_groups(&mut self, world: &SwarmWorld, ids: &[u32]) -> Result<()> {
        let ids: BTreeSet<u32> = ids.iter().copied().collect();
        if let Some(bad) = ids.iter().find(|id| !self.groups.contains_key(id)) {
            return Err(Error::UnknownGroup(*bad));
        }
        if ids.len() < 2 {
            return Ok(());
        }
        let survivor = *ids.iter().next().unwrap();
        let mut members: Vec<u32> = ids
            .iter()
            .flat_map(|id| self.groups[id].members.iter().copied())
            .collect();
        members.sort_unstable();
        let base = self.groups[&survivor].formation;
        let kind = base.map(|f| f.kind).unwrap_or_else(|| self.default_kind());
        let spec = FormationSpec {
            kind,
            center: group_centroid(world, &members)?,
            heading: base.map(|f| f.heading).unwrap_or(0.0),
            scale: base
                .filter(|f| f.kind == kind)
                .map(|f| f.scale)
                .unwrap_or(self.params.formation.default_scale(kind)),
            count: members.len(),
        };
        let plan = switch_formation(world, &members, spec, &self.params.formation)?;
        for id in ids.iter().skip(1) {
            self.groups.remove(id);
        }
        let g = self.groups.get_mut(&survivor).unwrap();
        g.members = members;
        g.formation = Some(spec);
        g.activity = Activity::Formation(plan);
        Ok(())
    }

    /// Replaces a group's task; other groups are untouched.
    pub fn allocate_task(&mut self, world: &SwarmWorld, group_id: u32, task: TaskSpec) -> Result<()> {
        let g = self.groups.get(&group_id).ok_or(Error::UnknownGroup(group_id))?;
        let members = g.members.clone();
        let activity = match task {
            TaskSpec::Search(task) => {
                let waypoints = plan_area_search(&task)?;
                let spec = FormationSpec {
                    kind: task.formation,
                    center: group_centroid(world, &members)?,
                    heading: g.formation.map(|f| f.heading).unwrap_or(0.0),
                    scale: self.params.formation.default_scale(task.formation),
                    count: members.len(),
                };
                let plan = switch_formation(world, &members, spec, &self.params.formation)?;
                Activity::Search(SearchRun {
                    task,
                    waypoints,
                    next: 0,
                    plan,
                })
            }
            TaskSpec::Track(task) => {
                task.validate()?;
                world.uav(task.target_id).ok_or(Error::UnknownUav(task.target_id))?;
                let trackers: Vec<u32> = members.iter().copied().filter(|id| *id != task.target_id).collect();
                if trackers.is_empty() {
                    return Err(Error::InvalidParameter("no trackers left besides the target".into()));
                }
                let prior = match &g.activity {
                    Activity::Track(run) => run.prior.clone(),
                    other => Box::new(other.clone()),
                };
                Activity::Track(TrackRun {
                    task,
                    trackers,
                    engaged: false,
                    prior,
                    desired: None,
                })
            }
            TaskSpec::Coverage(task) => {
                task.validate()?;
                let sites = members
                    .iter()
                    .map(|id| position(world, *id).map(|p| Vec2::new(p.x, p.y)))
                    .collect::<Result<Vec<_>>>()?;
                let out = lloyd_relax(&sites, &task.region, task.tolerance, task.max_iters)?;
                let targets = members
                    .iter()
                    .zip(&out.sites)
                    .map(|(id, s)| (*id, Vec3::new(s.x, s.y, task.altitude)))
                    .collect();
                Activity::Coverage(CoverageRun {
                    task,
                    targets,
                    iterations: out.iterations,
                    converged: out.converged,
                })
            }
        };
        self.groups.get_mut(&group_id).unwrap().activity = activity;
        Ok(())
    }

    /// True when the groups are disjoint and together cover every UAV.
    pub fn groups_partition(&self, ids: &[u32]) -> bool {
        let mut seen = BTreeSet::new();
        for g in self.groups.values() {
            if g.members.is_empty() {
                return false;
            }
            for m in &g.members {
                if !seen.insert(*m) {
                    return false;
                }
            }
        }
        let all: BTreeSet<u32> = ids.iter().copied().collect();
        seen == all
    }
}

fn position(world: &SwarmWorld, id: u32) -> Result<Vec3> {
    world.uav(id).map(|u| u.position).ok_or(Error::UnknownUav(id))
}

fn group_centroid(world: &SwarmWorld, members: &[u32]) -> Result<Vec3> {
    let ps = members.iter().map(|id| position(world, *id)).collect::<Result<Vec<_>>>()?;
    centroid(ps.iter()).ok_or_else(|| Error::InvalidParameter("empty group".into()))
}
