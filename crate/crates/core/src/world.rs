//! World state, kinematic integration and mission metrics.
//!
//! Each UAV is a velocity-commanded point mass integrated with explicit
//! Euler steps. Commanded velocities are clamped to `v_max`, then the change
//! from the previous velocity is limited to `a_max * dt`. Positions are
//! clamped to the region box and the velocity component pushing through a
//! wall is zeroed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{clamp_norm, Aabb, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub id: u32,
    pub position: Vec3,
    pub velocity: Vec3,
    pub group_id: u32,
    /// Formation slot currently assigned to this UAV, if any.
    pub slot_index: Option<usize>,
}

impl UavState {
    pub fn at(id: u32, position: Vec3) -> Self {
        Self {
            id,
            position,
            velocity: Vec3::zeros(),
            group_id: 1,
            slot_index: None,
        }
    }
}

/// Spherical obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Vec3,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    /// Speed cap, m/s.
    pub v_max: f64,
    /// Acceleration cap, m/s².
    pub a_max: f64,
    /// Collision distance, m.
    pub d_col: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            v_max: 10.0,
            a_max: 20.0,
            d_col: 1.0,
        }
    }
}

/// Per-tick speed statistics over all UAVs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl SpeedStats {
    pub fn of(uavs: &[UavState]) -> Option<Self> {
        if uavs.is_empty() {
            return None;
        }
        let mut min = f64::INFINITY;
        let mut max = 0.0f64;
        let mut sum = 0.0;
        for u in uavs {
            let s = u.velocity.norm();
            min = min.min(s);
            max = max.max(s);
            sum += s;
        }
        Some(Self {
            min,
            mean: sum / uavs.len() as f64,
            max,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MissionMetrics {
    pub collision_count: u64,
    pub speed_series: Vec<SpeedStats>,
    pub spacing_error_series: Vec<f64>,
    /// Simulated seconds elapsed.
    pub duration: f64,
}

impl MissionMetrics {
    pub fn max_speed(&self) -> f64 {
        self.speed_series.iter().map(|s| s.max).fold(0.0, f64::max)
    }

    pub fn avg_speed(&self) -> f64 {
        mean(self.speed_series.iter().map(|s| s.mean))
    }

    pub fn avg_spacing_error(&self) -> f64 {
        mean(self.spacing_error_series.iter().copied())
    }

    pub fn max_spacing_error(&self) -> f64 {
        self.spacing_error_series.iter().copied().fold(0.0, f64::max)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmWorld {
    pub uavs: Vec<UavState>,
    pub obstacles: Vec<Obstacle>,
    pub region: Aabb,
    pub tick: u64,
    pub dt: f64,
    pub rng_seed: u64,
    pub limits: Limits,
    pub metrics: MissionMetrics,
    // unordered id pairs closer than d_col at the end of the previous tick
    contacts: BTreeSet<(u32, u32)>,
}

impl SwarmWorld {
    pub fn new(uavs: Vec<UavState>, region: Aabb, dt: f64, limits: Limits, rng_seed: u64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if !region.is_valid() {
            return Err(Error::InvalidParameter("region box is empty".into()));
        }
        if !(limits.v_max > 0.0 && limits.a_max > 0.0 && limits.d_col > 0.0) {
            return Err(Error::InvalidParameter("limits must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for u in &uavs {
            if !seen.insert(u.id) {
                return Err(Error::DuplicateId(u.id));
            }
        }
        let mut world = Self {
            uavs,
            obstacles: Vec::new(),
            region,
            tick: 0,
            dt,
            rng_seed,
            limits,
            metrics: MissionMetrics::default(),
            contacts: BTreeSet::new(),
        };
        for u in &mut world.uavs {
            clamp_to_region(u, &world.region);
        }
        // pairs that start inside d_col are not counted as collisions
        world.contacts = world.close_pairs(limits.d_col);
        Ok(world)
    }

    pub fn with_obstacles(mut self, obstacles: Vec<Obstacle>) -> Self {
        self.obstacles = obstacles;
        self
    }

    /// Simulated time in seconds.
    pub fn time(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.uavs.iter().position(|u| u.id == id)
    }

    pub fn uav(&self, id: u32) -> Option<&UavState> {
        self.uavs.iter().find(|u| u.id == id)
    }

    pub fn ids(&self) -> Vec<u32> {
        self.uavs.iter().map(|u| u.id).collect()
    }

    /// Zeroes the velocity of every listed UAV immediately, bypassing the
    /// acceleration limit. Used by emergency stop.
    pub fn halt(&mut self, ids: &BTreeSet<u32>) {
        for u in self.uavs.iter_mut().filter(|u| ids.contains(&u.id)) {
            u.velocity = Vec3::zeros();
        }
    }

    /// Advances one tick with one commanded velocity per UAV (in `uavs` order).
    pub fn step(&mut self, commanded: &[Vec3]) -> Result<StepReport> {
        if commanded.len() != self.uavs.len() {
            return Err(Error::CountMismatch {
                expected: self.uavs.len(),
                got: commanded.len(),
            });
        }
        let Limits { v_max, a_max, d_col } = self.limits;
        let dv_max = a_max * self.dt;
        for (u, cmd) in self.uavs.iter_mut().zip(commanded) {
            let target = clamp_norm(*cmd, v_max);
            let dv = clamp_norm(target - u.velocity, dv_max);
            u.velocity = clamp_norm(u.velocity + dv, v_max);
            u.position += u.velocity * self.dt;
            clamp_to_region(u, &self.region);
        }
        let new_collisions = self.detect_collisions(d_col);
        if let Some(stats) = SpeedStats::of(&self.uavs) {
            self.metrics.speed_series.push(stats);
        }
        self.tick += 1;
        self.metrics.duration = self.time();
        Ok(StepReport {
            tick: self.tick,
            new_collisions,
        })
    }

    /// Counts pairs that dropped below `d_col` since the previous call.
    ///
    /// Events are edge-triggered: a pair that stays close is counted once,
    /// and must separate to at least `d_col` before it can count again.
    pub fn detect_collisions(&mut self, d_col: f64) -> u64 {
        let close = self.close_pairs(d_col);
        let new = close.difference(&self.contacts).count() as u64;
        self.contacts = close;
        self.metrics.collision_count += new;
        new
    }

    fn close_pairs(&self, d_col: f64) -> BTreeSet<(u32, u32)> {
        let mut out = BTreeSet::new();
        for (i, a) in self.uavs.iter().enumerate() {
            for b in &self.uavs[i + 1..] {
                if (a.position - b.position).norm() < d_col {
                    out.insert((a.id.min(b.id), a.id.max(b.id)));
                }
            }
        }
        out
    }

    /// Smallest pairwise distance, or infinity with fewer than two UAVs.
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.uavs.iter().enumerate() {
            for b in &self.uavs[i + 1..] {
                best = best.min((a.position - b.position).norm());
            }
        }
        best
    }
}

fn clamp_to_region(u: &mut UavState, region: &Aabb) {
    for axis in 0..3 {
        if u.position[axis] < region.min[axis] {
            u.position[axis] = region.min[axis];
            if u.velocity[axis] < 0.0 {
                u.velocity[axis] = 0.0;
            }
        } else if u.position[axis] > region.max[axis] {
            u.position[axis] = region.max[axis];
            if u.velocity[axis] > 0.0 {
                u.velocity[axis] = 0.0;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepReport {
    pub tick: u64,
    pub new_collisions: u64,
}

/// Mean distance from each UAV to its assigned slot.
///
/// `assignment[i]` is the slot index for `world.uavs[i]`.
pub fn spacing_error(world: &SwarmWorld, slots: &[Vec3], assignment: &[usize]) -> Result<f64> {
    let positions: Vec<Vec3> = world.uavs.iter().map(|u| u.position).collect();
    spacing_error_of(&positions, slots, assignment)
}

pub fn spacing_error_of(positions: &[Vec3], slots: &[Vec3], assignment: &[usize]) -> Result<f64> {
    if slots.len() != positions.len() {
        return Err(Error::CountMismatch {
            expected: positions.len(),
            got: slots.len(),
        });
    }
    if assignment.len() != positions.len() {
        return Err(Error::CountMismatch {
            expected: positions.len(),
            got: assignment.len(),
        });
    }
    if !is_permutation(assignment) {
        return Err(Error::NotAPermutation);
    }
    if positions.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = positions
        .iter()
        .zip(assignment)
        .map(|(p, &s)| (p - slots[s]).norm())
        .sum();
    Ok(total / positions.len() as f64)
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &i in p {
        if i >= p.len() || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}
