//! Small geometric helpers shared by the controllers.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

/// Directions used when two bodies occupy the same point and no
/// separation direction exists.
const TIE_BREAK_DIRECTIONS: [[f64; 3]; 8] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, -1.0, 0.0],
    [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2, 0.0],
    [-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2, 0.0],
    [-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2, 0.0],
    [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2, 0.0],
];

/// Fixed unit vector for a coincident pair, keyed by the lower id.
pub fn tie_break_direction(lower_id: u32) -> Vec3 {
    let d = TIE_BREAK_DIRECTIONS[lower_id as usize % TIE_BREAK_DIRECTIONS.len()];
    Vec3::new(d[0], d[1], d[2])
}

/// Unit vector pointing from `other` to `me`.
///
/// Coincident points fall back to the tie-break table; the UAV with the
/// lower id is pushed along the negated table entry so the pair stays
/// antisymmetric.
pub fn away_from(me: &Vec3, my_id: u32, other: &Vec3, other_id: u32) -> (Vec3, f64) {
    let diff = me - other;
    let d = diff.norm();
    if d > 0.0 {
        return (diff / d, d);
    }
    let lower = my_id.min(other_id);
    let dir = tie_break_direction(lower);
    if my_id <= other_id {
        (-dir, 0.0)
    } else {
        (dir, 0.0)
    }
}

/// Scales `v` down to `max` magnitude, preserving direction.
pub fn clamp_norm(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max && n > 0.0 {
        v * (max / n)
    } else {
        v
    }
}

/// Axis-aligned box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|i| self.min[i] < self.max[i])
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Axis-aligned rectangle in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            self.min,
            Vec2::new(self.max.x, self.min.y),
            self.max,
            Vec2::new(self.min.x, self.max.y),
        ]
    }
}

/// Mean of a set of points; `None` when empty.
pub fn centroid<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Vec3> {
    let mut sum = Vec3::zeros();
    let mut n = 0usize;
    for p in points {
        sum += p;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_norm_preserves_direction() {
        let v = Vec3::new(3.0, 4.0, 0.0);
        let c = clamp_norm(v, 1.0);
        assert!((c.norm() - 1.0).abs() < 1e-12);
        assert!((c.x / c.y - 0.75).abs() < 1e-12);
        assert_eq!(clamp_norm(v, 10.0), v);
    }

    #[test]
    fn coincident_pair_is_antisymmetric() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        let (a, _) = away_from(&p, 3, &p, 7);
        let (b, _) = away_from(&p, 7, &p, 3);
        assert!((a + b).norm() < 1e-15);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }
}
