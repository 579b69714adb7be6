use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_KEYPOINTS: usize = 21;
pub const STATIC_FEATURES: usize = 2 * NUM_KEYPOINTS;
pub const WRIST: usize = 0;
pub const INDEX_TIP: usize = 8;

/// 21 hand landmarks of one camera frame in normalized image coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeypointFrame {
    pub frame_index: u64,
    pub points: Vec<[f64; 2]>,
    pub detection_confidence: f64,
}

impl KeypointFrame {
    pub fn validate(&self) -> Result<()> {
        if self.points.len() != NUM_KEYPOINTS {
            return Err(Error::Dimension {
                expected: NUM_KEYPOINTS,
                got: self.points.len(),
            });
        }
        if self.points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("keypoint coordinates must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.detection_confidence) {
            return Err(Error::InvalidParameter("detection confidence must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GestureKind {
    Static,
    Dynamic,
}

/// One classifier decision for one frame; the fusion input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureObservation {
    pub label: String,
    pub confidence: f64,
    pub frame_index: u64,
    pub kind: GestureKind,
}

fn scale_to_unit(mut v: Vec<f64>) -> Vec<f64> {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        for x in &mut v {
            *x /= m;
        }
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
    }
    v
}

/// Wrist-relative coordinates scaled so the largest magnitude is 1,
/// flattened as x0, y0, x1, y1, ...
pub fn normalize_static(frame: &KeypointFrame) -> Result<Vec<f64>> {
    frame.validate()?;
    let [wx, wy] = frame.points[WRIST];
    let v = frame
        .points
        .iter()
        .flat_map(|[x, y]| [x - wx, y - wy])
        .collect();
    Ok(scale_to_unit(v))
}

/// Index-fingertip trace relative to the first frame, scaled by the
/// largest displacement component; `2 * history.len()` values.
pub fn normalize_dynamic(history: &[KeypointFrame]) -> Result<Vec<f64>> {
    let first = history.first().ok_or(Error::Dimension { expected: 1, got: 0 })?;
    for f in history {
        f.validate()?;
    }
    let [x0, y0] = first.points[INDEX_TIP];
    let v = history
        .iter()
        .flat_map(|f| {
            let [x, y] = f.points[INDEX_TIP];
            [x - x0, y - y0]
        })
        .collect();
    Ok(scale_to_unit(v))
}
