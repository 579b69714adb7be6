//! Synchronized target tracking.

use serde::{Deserialize, Serialize};

use crate::assignment::assign_slots;
use crate::error::{Error, Result};
use crate::formation::{generate_slots, FormationKind, FormationSpec};
use crate::geom::Vec3;
use crate::world::SwarmWorld;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackTask {
    pub target_id: u32,
    pub perception_range: f64,
    pub standoff_radius: f64,
}

impl TrackTask {
    pub fn validate(&self) -> Result<()> {
        if !(self.standoff_radius > 0.0 && self.perception_range > self.standoff_radius) {
            return Err(Error::InvalidParameter(
                "tracking needs perception_range > standoff_radius > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingDecision {
    pub engaged: bool,
    /// Desired point per tracker, in the order trackers were given.
    /// `None` while the target is not yet detected.
    pub desired: Option<Vec<Vec3>>,
}

/// Detection is shared: once any tracker sees the target, every tracker
/// engages in the same call. Engaged trackers spread over a standoff circle
/// around the target's current position.
pub fn update_tracking(
    world: &SwarmWorld,
    trackers: &[u32],
    task: &TrackTask,
    engaged: bool,
) -> Result<TrackingDecision> {
    if trackers.is_empty() {
        return Err(Error::InvalidParameter("tracking needs at least one tracker".into()));
    }
    let target = world.uav(task.target_id).ok_or(Error::UnknownUav(task.target_id))?;
    let positions = trackers
        .iter()
        .map(|id| world.uav(*id).map(|u| u.position).ok_or(Error::UnknownUav(*id)))
        .collect::<Result<Vec<_>>>()?;
    let detected = engaged
        || positions
            .iter()
            .any(|p| (p - target.position).norm() <= task.perception_range);
    if !detected {
        return Ok(TrackingDecision {
            engaged: false,
            desired: None,
        });
    }
    let ring = generate_slots(&FormationSpec {
        kind: FormationKind::Circle,
        center: target.position,
        heading: 0.0,
        scale: task.standoff_radius,
        count: trackers.len(),
    })?;
    let assignment = assign_slots(&positions, &ring)?;
    Ok(TrackingDecision {
        engaged: true,
        desired: Some(assignment.iter().map(|&s| ring[s]).collect()),
    })
}
