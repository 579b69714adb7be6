//! Boustrophedon area search planning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::FormationKind;
use crate::geom::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTask {
    pub center: Vec3,
    pub radius: f64,
    pub lane_spacing: f64,
    /// Formation the group holds while sweeping.
    pub formation: FormationKind,
}

impl SearchTask {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.lane_spacing > 0.0) {
            return Err(Error::InvalidParameter(
                "search radius and lane spacing must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Lawnmower waypoints covering the search disk.
///
/// Lanes run along x at `y = k · lane_spacing` for every integer `k` with
/// `|y| < radius`, visited in ascending `y`, alternating direction. Each
/// lane spans the disk chord at its `y`. A disk narrower than half a lane
/// collapses to its center.
pub fn plan_area_search(task: &SearchTask) -> Result<Vec<Vec3>> {
    task.validate()?;
    let (r, s) = (task.radius, task.lane_spacing);
    if r < s / 2.0 {
        return Ok(vec![task.center]);
    }
    let k_max = (r / s).ceil() as i64 - 1;
    let mut out = Vec::with_capacity(2 * (2 * k_max as usize + 1));
    for (lane, k) in (-k_max..=k_max).enumerate() {
        let y = k as f64 * s;
        let half = (r * r - y * y).max(0.0).sqrt();
        let (x0, x1) = if lane % 2 == 0 { (-half, half) } else { (half, -half) };
        out.push(task.center + Vec3::new(x0, y, 0.0));
        out.push(task.center + Vec3::new(x1, y, 0.0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(radius: f64, lane_spacing: f64) -> SearchTask {
        SearchTask {
            center: Vec3::new(50.0, -20.0, 15.0),
            radius,
            lane_spacing,
            formation: FormationKind::Line,
        }
    }

    #[test]
    fn tiny_disk_collapses_to_center() {
        let t = task(1.0, 10.0);
        assert_eq!(plan_area_search(&t).unwrap(), vec![t.center]);
    }

    #[test]
    fn lanes_follow_chords() {
        let t = task(10.0, 5.0);
        let wps = plan_area_search(&t).unwrap();
        let ys: Vec<f64> = wps.chunks(2).map(|c| c[0].y - t.center.y).collect();
        assert_eq!(ys, vec![-5.0, 0.0, 5.0]);
        for lane in wps.chunks(2) {
            let y = lane[0].y - t.center.y;
            let chord = (100.0 - y * y).sqrt();
            assert!(((lane[0].x - lane[1].x).abs() - 2.0 * chord).abs() < 1e-12);
            assert!(((lane[0].x + lane[1].x) / 2.0 - t.center.x).abs() < 1e-12);
        }
        // alternating sweep direction
        assert!(wps[1].x > wps[0].x && wps[3].x < wps[2].x && wps[5].x > wps[4].x);
    }

    #[test]
    fn waypoints_stay_in_disk_and_lanes_are_monotone() {
        for (r, s) in [(10.0, 5.0), (37.0, 4.0), (3.0, 5.5), (100.0, 9.0)] {
            let t = task(r, s);
            let wps = plan_area_search(&t).unwrap();
            assert!(wps.iter().all(|w| (w - t.center).norm() <= r + 1e-9));
            for pair in wps.chunks(2).collect::<Vec<_>>().windows(2) {
                assert!(pair[1][0].y > pair[0][0].y);
            }
        }
    }

    #[test]
    fn invalid_task_rejected() {
        assert!(plan_area_search(&task(0.0, 5.0)).is_err());
        assert!(plan_area_search(&task(5.0, -1.0)).is_err());
    }
}
