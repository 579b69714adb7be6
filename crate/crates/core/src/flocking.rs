//! Reflexive velocity terms for the low-level controller.
//!
//! Every term is a pure function of one UAV and its surroundings. Range
//! tests are strict (`d < r`), so a neighbor sitting exactly on a radius
//! contributes nothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{away_from, clamp_norm, Vec3};
use crate::world::{Obstacle, UavState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlockParams {
    pub r_sep: f64,
    pub r_coh: f64,
    pub r_align: f64,
    pub r_rep: f64,
    pub r_obs: f64,
    pub c_sep: f64,
    pub c_coh: f64,
    pub c_align: f64,
    pub p_rep: f64,
    pub c_obs: f64,
    pub v_mig: f64,
    /// Turns the short-range half-spring layer on or off.
    pub repulsion_enabled: bool,
}

impl Default for FlockParams {
    fn default() -> Self {
        Self {
            r_sep: 8.0,
            r_coh: 20.0,
            r_align: 15.0,
            r_rep: 3.0,
            r_obs: 6.0,
            c_sep: 0.6,
            c_coh: 0.15,
            c_align: 0.4,
            p_rep: 2.0,
            c_obs: 1.0,
            v_mig: 5.0,
            repulsion_enabled: true,
        }
    }
}

impl FlockParams {
    pub fn validate(&self) -> Result<()> {
        let radii = [self.r_sep, self.r_coh, self.r_align, self.r_rep, self.r_obs];
        if radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidParameter("flocking radii must be positive".into()));
        }
        if self.r_rep >= self.r_sep {
            return Err(Error::InvalidParameter("r_rep must be smaller than r_sep".into()));
        }
        let gains = [self.c_sep, self.c_coh, self.c_align, self.p_rep, self.c_obs, self.v_mig];
        if gains.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::InvalidParameter("flocking gains must be non-negative".into()));
        }
        Ok(())
    }
}

fn linear_repulsion<'a>(
    me: &UavState,
    neighbors: impl IntoIterator<Item = &'a UavState>,
    radius: f64,
    gain: f64,
) -> Vec3 {
    let mut sum = Vec3::zeros();
    for n in neighbors {
        let (dir, d) = away_from(&me.position, me.id, &n.position, n.id);
        if d < radius {
            sum += dir * (radius - d);
        }
    }
    sum * gain
}

/// `c_sep · Σ (r_sep − d) · unit(x_i − x_j)` over neighbors closer than `r_sep`.
pub fn separation_velocity<'a>(
    me: &UavState,
    neighbors: impl IntoIterator<Item = &'a UavState>,
    p: &FlockParams,
) -> Vec3 {
    linear_repulsion(me, neighbors, p.r_sep, p.c_sep)
}

/// Half-spring: purely repulsive linear spring active below `r_rep`.
pub fn half_spring_repulsion<'a>(
    me: &UavState,
    neighbors: impl IntoIterator<Item = &'a UavState>,
    p: &FlockParams,
) -> Vec3 {
    linear_repulsion(me, neighbors, p.r_rep, p.p_rep)
}

pub fn cohesion_velocity<'a>(
    me: &UavState,
    neighbors: impl IntoIterator<Item = &'a UavState>,
    p: &FlockParams,
) -> Vec3 {
    let mut sum = Vec3::zeros();
    let mut n = 0usize;
    for nb in neighbors {
        if (nb.position - me.position).norm() < p.r_coh {
            sum += nb.position;
            n += 1;
        }
    }
    if n == 0 {
        return Vec3::zeros();
    }
    (sum / n as f64 - me.position) * p.c_coh
}

pub fn alignment_velocity<'a>(
    me: &UavState,
    neighbors: impl IntoIterator<Item = &'a UavState>,
    p: &FlockParams,
) -> Vec3 {
    let mut sum = Vec3::zeros();
    let mut n = 0usize;
    for nb in neighbors {
        if (nb.position - me.position).norm() < p.r_align {
            sum += nb.velocity;
            n += 1;
        }
    }
    if n == 0 {
        return Vec3::zeros();
    }
    (sum / n as f64 - me.velocity) * p.c_align
}

/// Pushes away from spheres whose surface is closer than `r_obs`.
///
/// A UAV inside a sphere is pushed radially outward with the magnitude it
/// would get on the surface, `c_obs · r_obs`.
pub fn obstacle_avoidance_velocity(me: &UavState, obstacles: &[Obstacle], p: &FlockParams) -> Vec3 {
    let mut sum = Vec3::zeros();
    for (k, ob) in obstacles.iter().enumerate() {
        let diff = me.position - ob.center;
        let dist = diff.norm();
        let surface = dist - ob.radius;
        if surface >= p.r_obs {
            continue;
        }
        let dir = if dist > 0.0 {
            diff / dist
        } else {
            crate::geom::tie_break_direction(k as u32)
        };
        sum += dir * (p.r_obs - surface.max(0.0));
    }
    sum * p.c_obs
}

/// Constant-speed pull toward `target`; zero within 0.1 m.
pub fn migration_velocity(me: &UavState, target: &Vec3, p: &FlockParams) -> Vec3 {
    let diff = target - me.position;
    let d = diff.norm();
    if d <= MIGRATION_ARRIVAL_RADIUS {
        return Vec3::zeros();
    }
    diff * (p.v_mig / d)
}

pub const MIGRATION_ARRIVAL_RADIUS: f64 = 0.1;

/// Sums the terms and clamps the result to `v_max`.
pub fn combine_velocity<'a>(terms: impl IntoIterator<Item = &'a Vec3>, v_max: f64) -> Vec3 {
    let sum = terms.into_iter().fold(Vec3::zeros(), |acc, t| acc + t);
    clamp_norm(sum, v_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uav(id: u32, x: f64, y: f64, z: f64) -> UavState {
        UavState::at(id, Vec3::new(x, y, z))
    }

    fn p() -> FlockParams {
        FlockParams::default()
    }

    #[test]
    fn defaults_validate() {
        p().validate().unwrap();
        let bad = FlockParams { r_rep: 9.0, ..p() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn separation_examples() {
        let me = uav(0, 0.0, 0.0, 0.0);
        let far = [uav(1, 100.0, 0.0, 0.0)];
        assert_eq!(separation_velocity(&me, &far, &p()), Vec3::zeros());

        let mirror = [uav(1, 2.0, 1.0, 0.0), uav(2, -2.0, -1.0, 0.0)];
        assert!(separation_velocity(&me, &mirror, &p()).norm() < 1e-12);

        let params = FlockParams { r_sep: 5.0, c_sep: 1.0, ..p() };
        let one = [uav(1, 3.0, 0.0, 0.0)];
        let v = separation_velocity(&me, &one, &params);
        // (r_sep - d) = 2 pointing from neighbor to self
        assert!((v - Vec3::new(-2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn coincident_neighbors_do_not_divide_by_zero() {
        let a = uav(4, 1.0, 1.0, 1.0);
        let b = uav(9, 1.0, 1.0, 1.0);
        let va = separation_velocity(&a, [&b], &p());
        let vb = separation_velocity(&b, [&a], &p());
        assert!(va.iter().all(|c| c.is_finite()));
        assert!((va.norm() - p().c_sep * p().r_sep).abs() < 1e-12);
        assert!((va + vb).norm() < 1e-12);
    }

    #[test]
    fn cohesion_examples() {
        let me = uav(0, 0.0, 0.0, 0.0);
        assert_eq!(cohesion_velocity(&me, &[] as &[UavState], &p()), Vec3::zeros());
        let around = [uav(1, 3.0, 0.0, 0.0), uav(2, -3.0, 0.0, 0.0)];
        assert!(cohesion_velocity(&me, &around, &p()).norm() < 1e-12);
        let params = FlockParams { c_coh: 0.5, ..p() };
        let v = cohesion_velocity(&me, &[uav(1, 4.0, 0.0, 0.0)], &params);
        assert!((v - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn alignment_examples() {
        let mut me = uav(0, 0.0, 0.0, 0.0);
        assert_eq!(alignment_velocity(&me, &[] as &[UavState], &p()), Vec3::zeros());
        let mut a = uav(1, 1.0, 0.0, 0.0);
        let mut b = uav(2, 0.0, 1.0, 0.0);
        me.velocity = Vec3::new(1.0, 2.0, 0.0);
        a.velocity = me.velocity;
        b.velocity = me.velocity;
        assert!(alignment_velocity(&me, [&a, &b], &p()).norm() < 1e-12);

        me.velocity = Vec3::zeros();
        a.velocity = Vec3::new(2.0, 0.0, 0.0);
        b.velocity = Vec3::new(0.0, 2.0, 0.0);
        let params = FlockParams { c_align: 1.0, ..p() };
        let v = alignment_velocity(&me, [&a, &b], &params);
        assert!((v - Vec3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn half_spring_examples() {
        let me = uav(0, 0.0, 0.0, 0.0);
        let params = p();
        let at_cutoff = [uav(1, params.r_rep, 0.0, 0.0)];
        assert_eq!(half_spring_repulsion(&me, &at_cutoff, &params), Vec3::zeros());
        let beyond = [uav(1, params.r_rep + 0.5, 0.0, 0.0)];
        assert_eq!(half_spring_repulsion(&me, &beyond, &params), Vec3::zeros());
        let half = [uav(1, 0.0, params.r_rep / 2.0, 0.0)];
        let v = half_spring_repulsion(&me, &half, &params);
        assert!((v.norm() - params.p_rep * params.r_rep / 2.0).abs() < 1e-12);
        assert!(v.y < 0.0);
    }

    #[test]
    fn obstacle_examples() {
        let me = uav(0, 0.0, 0.0, 0.0);
        let far = [Obstacle { center: Vec3::new(100.0, 0.0, 0.0), radius: 2.0 }];
        assert_eq!(obstacle_avoidance_velocity(&me, &far, &p()), Vec3::zeros());

        let near = [Obstacle { center: Vec3::new(4.0, 0.0, 0.0), radius: 2.0 }];
        let params = FlockParams { r_obs: 5.0, c_obs: 1.0, ..p() };
        let v = obstacle_avoidance_velocity(&me, &near, &params);
        assert!((v.norm() - 3.0).abs() < 1e-12);
        assert!(v.y.abs() < 1e-15 && v.z.abs() < 1e-15 && v.x < 0.0);

        let inside = [Obstacle { center: Vec3::new(0.5, 0.0, 0.0), radius: 2.0 }];
        let v = obstacle_avoidance_velocity(&me, &inside, &params);
        assert!((v.norm() - params.c_obs * params.r_obs).abs() < 1e-12);
        assert!(v.x < 0.0);
    }

    #[test]
    fn migration_examples() {
        let me = uav(0, 0.0, 0.0, 0.0);
        assert_eq!(migration_velocity(&me, &Vec3::zeros(), &p()), Vec3::zeros());
        let v = migration_velocity(&me, &Vec3::new(100.0, 0.0, 0.0), &p());
        assert!((v - Vec3::new(5.0, 0.0, 0.0)).norm() < 1e-12);
        let v = migration_velocity(&me, &Vec3::new(-3.0, 7.0, 2.5), &p());
        assert!((v.norm() - p().v_mig).abs() < 1e-12);
    }

    #[test]
    fn combine_examples() {
        let a = Vec3::new(1.0, 2.0, 0.0);
        assert_eq!(combine_velocity([&a], 10.0), a);
        assert_eq!(combine_velocity([&a, &(-a)], 10.0), Vec3::zeros());
        let big = Vec3::new(18.0, 24.0, 0.0);
        let v = combine_velocity([&big], 10.0);
        assert!((v.norm() - 10.0).abs() < 1e-12);
        assert!((v.normalize() - big.normalize()).norm() < 1e-12);
    }
}
