//! Formation slot generation, slot-seeking control and formation switching.

use serde::{Deserialize, Serialize};

use crate::assignment::assign_slots;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::world::{spacing_error_of, SwarmWorld, UavState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FormationKind {
    V,
    Circle,
    Line,
}

impl FormationKind {
    pub fn name(&self) -> &'static str {
        match self {
            FormationKind::V => "V",
            FormationKind::Circle => "Circle",
            FormationKind::Line => "Line",
        }
    }
}

/// Geometric description of a formation.
///
/// `scale` is the circle radius for `Circle` and the inter-slot spacing for
/// `Line` and `V`. `heading` is measured counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormationSpec {
    pub kind: FormationKind,
    pub center: Vec3,
    pub heading: f64,
    pub scale: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormationParams {
    /// Proportional slot-seeking gain, 1/s.
    pub k_f: f64,
    pub v_half_angle_deg: f64,
    /// Spacing error below which a transition counts as settled, m.
    pub completion_tolerance: f64,
    /// Consecutive settled ticks required to complete a transition.
    pub completion_ticks: u32,
    pub circle_radius: f64,
    pub line_spacing: f64,
    pub v_spacing: f64,
    /// Scale multiplier applied by the expand command.
    pub expand_factor: f64,
}

impl Default for FormationParams {
    fn default() -> Self {
        Self {
            k_f: 1.2,
            v_half_angle_deg: 25.0,
            completion_tolerance: 0.5,
            completion_ticks: 25,
            circle_radius: 10.0,
            line_spacing: 5.0,
            v_spacing: 5.0,
            expand_factor: 1.5,
        }
    }
}

impl FormationParams {
    pub fn default_scale(&self, kind: FormationKind) -> f64 {
        match kind {
            FormationKind::V => self.v_spacing,
            FormationKind::Circle => self.circle_radius,
            FormationKind::Line => self.line_spacing,
        }
    }

    pub fn v_half_angle(&self) -> f64 {
        self.v_half_angle_deg.to_radians()
    }
}

pub const DEFAULT_V_HALF_ANGLE_DEG: f64 = 25.0;

pub fn generate_slots(spec: &FormationSpec) -> Result<Vec<Vec3>> {
    generate_slots_with(spec, DEFAULT_V_HALF_ANGLE_DEG.to_radians())
}

/// Slot positions for `spec`, all at the altitude of `spec.center`.
///
/// * Circle: equally spaced, first slot along the heading.
/// * Line: perpendicular to the heading, centered, `scale` apart.
/// * V: apex at the center pointing along the heading; remaining slots
///   alternate left/right onto two wings swept back by `half_angle`.
pub fn generate_slots_with(spec: &FormationSpec, half_angle: f64) -> Result<Vec<Vec3>> {
    if spec.count == 0 {
        return Err(Error::InvalidParameter("formation count must be at least 1".into()));
    }
    if !(spec.scale > 0.0) {
        return Err(Error::InvalidParameter("formation scale must be positive".into()));
    }
    let forward = Vec3::new(spec.heading.cos(), spec.heading.sin(), 0.0);
    let left = Vec3::new(-spec.heading.sin(), spec.heading.cos(), 0.0);
    let n = spec.count;
    let slots = match spec.kind {
        FormationKind::Circle => (0..n)
            .map(|k| {
                let a = spec.heading + std::f64::consts::TAU * k as f64 / n as f64;
                spec.center + Vec3::new(a.cos(), a.sin(), 0.0) * spec.scale
            })
            .collect(),
        FormationKind::Line => {
            let mid = (n as f64 - 1.0) / 2.0;
            (0..n)
                .map(|k| spec.center + left * ((k as f64 - mid) * spec.scale))
                .collect()
        }
        FormationKind::V => {
            let back = -forward * half_angle.cos();
            let lateral = left * half_angle.sin();
            (0..n)
                .map(|k| {
                    if k == 0 {
                        return spec.center;
                    }
                    let rank = k.div_ceil(2) as f64;
                    let side = if k % 2 == 1 { 1.0 } else { -1.0 };
                    spec.center + (back + lateral * side) * (rank * spec.scale)
                })
                .collect()
        }
    };
    Ok(slots)
}

/// Proportional slot-seeking velocity `k_f · (slot − position)`.
pub fn formation_velocity(uav: &UavState, slot: &Vec3, k_f: f64) -> Vec3 {
    (slot - uav.position) * k_f
}

/// A formation a set of UAVs is converging to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionPlan {
    pub spec: FormationSpec,
    pub members: Vec<u32>,
    pub slots: Vec<Vec3>,
    /// `assignment[i]` is the slot of `members[i]`.
    pub assignment: Vec<usize>,
    pub started_tick: u64,
    pub settled_ticks: u32,
    pub completed_tick: Option<u64>,
    /// Where the formation center is headed, while it is travelling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Vec3>,
}

impl TransitionPlan {
    pub fn is_complete(&self) -> bool {
        self.completed_tick.is_some()
    }

    pub fn slot_of(&self, id: u32) -> Option<(usize, Vec3)> {
        let i = self.members.iter().position(|&m| m == id)?;
        let s = self.assignment[i];
        Some((s, self.slots[s]))
    }

    pub fn spacing_error(&self, world: &SwarmWorld) -> f64 {
        let positions: Vec<Vec3> = self
            .members
            .iter()
            .filter_map(|id| world.uav(*id).map(|u| u.position))
            .collect();
        if positions.len() != self.members.len() {
            return f64::INFINITY;
        }
        spacing_error_of(&positions, &self.slots, &self.assignment).unwrap_or(f64::INFINITY)
    }

    /// Moves every slot (and the spec center) by `delta` without reassigning.
    pub fn translate(&mut self, delta: Vec3) {
        self.spec.center += delta;
        for s in &mut self.slots {
            *s += delta;
        }
    }

    /// Advances the completion hysteresis after a world step. Returns true on
    /// the tick the plan completes. A travelling plan completes only after
    /// its center has arrived.
    pub fn update(&mut self, world: &SwarmWorld, params: &FormationParams) -> bool {
        if self.is_complete() {
            return false;
        }
        if self.spacing_error(world) < params.completion_tolerance {
            self.settled_ticks += 1;
        } else {
            self.settled_ticks = 0;
        }
        if self.settled_ticks >= params.completion_ticks && self.goal.is_none() {
            self.completed_tick = Some(world.tick);
            return true;
        }
        false
    }
}

/// Builds the plan moving `members` into formation `to`.
///
/// Slots are regenerated and re-assigned from current positions. A plan
/// whose error is already within tolerance is complete at once.
pub fn switch_formation(
    world: &SwarmWorld,
    members: &[u32],
    to: FormationSpec,
    params: &FormationParams,
) -> Result<TransitionPlan> {
    if to.count != members.len() {
        return Err(Error::CountMismatch {
            expected: members.len(),
            got: to.count,
        });
    }
    let positions = members
        .iter()
        .map(|id| world.uav(*id).map(|u| u.position).ok_or(Error::UnknownUav(*id)))
        .collect::<Result<Vec<_>>>()?;
    let slots = generate_slots_with(&to, params.v_half_angle())?;
    let assignment = assign_slots(&positions, &slots)?;
    let mut plan = TransitionPlan {
        spec: to,
        members: members.to_vec(),
        slots,
        assignment,
        started_tick: world.tick,
        settled_ticks: 0,
        completed_tick: None,
        goal: None,
    };
    if plan.spacing_error(world) < params.completion_tolerance {
        plan.completed_tick = Some(world.tick);
    }
    Ok(plan)
}
