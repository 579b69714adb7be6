//! Synthetic hand keypoints.
//!
//! Each static gesture is a hand template: per finger, a base point, a
//! pointing angle and segment lengths in a hand-local frame (wrist at the
//! origin, fingers toward +y), plus a curl state. A sample perturbs every
//! joint angle by N(0, 8 deg) and every segment length by U(0.9, 1.1),
//! rotates the hand by the class orientation plus U(-15, 15) deg, scales
//! it by U(0.12, 0.22) image units, places the wrist uniformly in
//! [0.35, 0.65]^2, adds N(0, sigma) to every coordinate and clamps to
//! [0, 1]. Image y grows downward.
//!
//! Dynamic gestures move an open hand along a trajectory over the window:
//! `swipe_left` travels U(0.15, 0.3) to the left with up to 0.05 vertical
//! drift; `circle` traces U(1.7, 2.1) pi radians clockwise on a radius of
//! U(0.05, 0.12). Every frame gets its own keypoint noise.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::gesture::{
    normalize_dynamic, normalize_static, Dataset, KeypointFrame, DYNAMIC_LABELS, DYNAMIC_WINDOW, STATIC_LABELS,
};

pub const DEFAULT_NOISE_SIGMA: f64 = 0.01;

#[derive(Debug, Clone, Copy)]
enum Curl {
    Extended,
    Half,
    Curled,
}

struct Finger {
    base: [f64; 2],
    angle_deg: f64,
    segments: &'static [f64],
}

const THUMB: Finger = Finger {
    base: [0.25, 0.25],
    angle_deg: 35.0,
    segments: &[0.35, 0.30, 0.25],
};
const FINGERS: [Finger; 4] = [
    Finger {
        base: [0.30, 0.90],
        angle_deg: 80.0,
        segments: &[0.40, 0.25, 0.20],
    },
    Finger {
        base: [0.05, 0.95],
        angle_deg: 90.0,
        segments: &[0.45, 0.28, 0.22],
    },
    Finger {
        base: [-0.18, 0.90],
        angle_deg: 100.0,
        segments: &[0.40, 0.25, 0.20],
    },
    Finger {
        base: [-0.38, 0.80],
        angle_deg: 110.0,
        segments: &[0.32, 0.20, 0.18],
    },
];

/// Curl of thumb, index, middle, ring, pinky and the hand orientation.
fn template(label: &str) -> Option<([Curl; 5], f64)> {
    use Curl::{Curled as C, Extended as E, Half as H};
    Some(match label {
        "open_palm" => ([E, E, E, E, E], 0.0),
        "fist" => ([C, C, C, C, C], 0.0),
        "point_up" => ([C, E, C, C, C], 0.0),
        "victory" => ([C, E, E, C, C], 0.0),
        "three" => ([C, E, E, E, C], 0.0),
        "four" => ([C, E, E, E, E], 0.0),
        "thumb_up" => ([E, C, C, C, C], 0.0),
        "call" => ([E, C, C, C, E], 0.0),
        "rock" => ([C, E, C, C, E], 0.0),
        "l_shape" => ([E, E, C, C, C], 0.0),
        "pinky_up" => ([C, C, C, C, E], 0.0),
        "three_thumb" => ([E, E, E, C, C], 0.0),
        "point_left" => ([C, E, C, C, C], 90.0),
        "point_right" => ([C, E, C, C, C], -90.0),
        "ok" => ([H, H, E, E, E], 0.0),
        "thumb_down" => ([E, C, C, C, C], 180.0),
        _ => return None,
    })
}

/// Cumulative bend per segment and the length factor for a curl state.
fn bends(curl: Curl, thumb: bool) -> ([f64; 3], f64) {
    match (curl, thumb) {
        (Curl::Extended, _) => ([0.0, 0.0, 0.0], 1.0),
        (Curl::Half, false) => ([0.0, 70.0, 70.0], 0.9),
        (Curl::Half, true) => ([25.0, 25.0, 20.0], 0.9),
        (Curl::Curled, false) => ([0.0, 170.0, 30.0], 0.55),
        (Curl::Curled, true) => ([95.0, 45.0, 20.0], 0.7),
    }
}

fn chain<R: Rng>(f: &Finger, curl: Curl, thumb: bool, rng: &mut R, out: &mut Vec<[f64; 2]>) {
    let jitter = Normal::new(0.0, 8.0).expect("positive std");
    let (bend, shrink) = bends(curl, thumb);
    let mut p = f.base;
    out.push(p);
    let mut angle = f.angle_deg;
    for (seg, b) in f.segments.iter().zip(bend) {
        // the thumb folds across the palm, fingers fold back down over it
        angle += if thumb { b } else { -b } + jitter.sample(rng);
        let len = seg * shrink * rng.random_range(0.9..1.1);
        let a = angle.to_radians();
        p = [p[0] + len * a.cos(), p[1] + len * a.sin()];
        out.push(p);
    }
}

/// Hand-local keypoints of a static pose.
fn local_pose<R: Rng>(curls: &[Curl; 5], rng: &mut R) -> Vec<[f64; 2]> {
    let mut pts = vec![[0.0, 0.0]];
    chain(&THUMB, curls[0], true, rng, &mut pts);
    for (f, c) in FINGERS.iter().zip(&curls[1..]) {
        chain(f, *c, false, rng, &mut pts);
    }
    // the thumb chain contributes 4 points, each finger 4
    debug_assert_eq!(pts.len(), 21);
    pts
}

fn place<R: Rng>(local: &[[f64; 2]], rot_deg: f64, scale: f64, wrist: [f64; 2], sigma: f64, rng: &mut R) -> Vec<[f64; 2]> {
    let noise = Normal::new(0.0, sigma.max(0.0)).expect("non-negative std");
    let (s, c) = rot_deg.to_radians().sin_cos();
    local
        .iter()
        .map(|[x, y]| {
            let rx = c * x - s * y;
            let ry = s * x + c * y;
            let nx = if sigma > 0.0 { noise.sample(rng) } else { 0.0 };
            let ny = if sigma > 0.0 { noise.sample(rng) } else { 0.0 };
            [
                (wrist[0] + scale * rx + nx).clamp(0.0, 1.0),
                (wrist[1] - scale * ry + ny).clamp(0.0, 1.0),
            ]
        })
        .collect()
}

pub fn static_frame<R: Rng>(label: &str, frame_index: u64, sigma: f64, rng: &mut R) -> Result<KeypointFrame> {
    let (curls, orientation) =
        template(label).ok_or_else(|| Error::Dataset(format!("no template for static gesture {label}")))?;
    let local = local_pose(&curls, rng);
    let rot = orientation + rng.random_range(-15.0..15.0);
    let scale = rng.random_range(0.12..0.22);
    let wrist = [rng.random_range(0.35..0.65), rng.random_range(0.35..0.65)];
    Ok(KeypointFrame {
        frame_index,
        points: place(&local, rot, scale, wrist, sigma, rng),
        detection_confidence: rng.random_range(0.8..1.0),
    })
}

/// A static gesture held still for `n` frames: one pose and placement,
/// fresh keypoint noise per frame.
pub fn static_hold<R: Rng>(label: &str, first_frame: u64, n: usize, sigma: f64, rng: &mut R) -> Result<Vec<KeypointFrame>> {
    let (curls, orientation) =
        template(label).ok_or_else(|| Error::Dataset(format!("no template for static gesture {label}")))?;
    let local = local_pose(&curls, rng);
    let rot = orientation + rng.random_range(-15.0..15.0);
    let scale = rng.random_range(0.12..0.22);
    let wrist = [rng.random_range(0.35..0.65), rng.random_range(0.35..0.65)];
    Ok((0..n)
        .map(|k| KeypointFrame {
            frame_index: first_frame + k as u64,
            points: place(&local, rot, scale, wrist, sigma, rng),
            detection_confidence: 0.95,
        })
        .collect())
}

/// A window of frames for a dynamic gesture starting at `first_frame`.
pub fn dynamic_sequence<R: Rng>(
    label: &str,
    first_frame: u64,
    window: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<KeypointFrame>> {
    let local = local_pose(&template("open_palm").expect("open palm template").0, rng);
    let rot = rng.random_range(-15.0..15.0);
    let scale = rng.random_range(0.12..0.22);
    let start = [rng.random_range(0.4..0.6), rng.random_range(0.4..0.6)];
    let steps = (window.max(2) - 1) as f64;
    let path: Vec<[f64; 2]> = match label {
        "swipe_left" => {
            let dist = rng.random_range(0.15..0.3);
            let drift = rng.random_range(-0.05..0.05);
            let ease = rng.random_range(0.7..1.4);
            (0..window)
                .map(|k| {
                    let u = (k as f64 / steps).powf(ease);
                    [start[0] + dist / 2.0 - dist * u, start[1] + drift * u]
                })
                .collect()
        }
        "circle" => {
            let r = rng.random_range(0.05..0.12);
            let phase = rng.random_range(0.0..2.0 * PI);
            let span = rng.random_range(1.7..2.1) * PI;
            (0..window)
                .map(|k| {
                    // increasing angle is clockwise on screen since image y points down
                    let a = phase + span * k as f64 / steps;
                    [start[0] + r * a.cos(), start[1] + r * a.sin()]
                })
                .collect()
        }
        other => return Err(Error::Dataset(format!("no template for dynamic gesture {other}"))),
    };
    Ok(path
        .iter()
        .enumerate()
        .map(|(k, w)| KeypointFrame {
            frame_index: first_frame + k as u64,
            points: place(&local, rot, scale, *w, sigma, rng),
            detection_confidence: 0.95,
        })
        .collect())
}

pub fn static_dataset(labels: &[&str], per_class: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = Dataset::new(labels.iter().map(|s| s.to_string()).collect());
    for i in 0..per_class {
        for (c, label) in labels.iter().enumerate() {
            let f = static_frame(label, i as u64, sigma, &mut rng)?;
            ds.push(normalize_static(&f)?, c);
        }
    }
    Ok(ds)
}

pub fn dynamic_dataset(per_class: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = Dataset::new(DYNAMIC_LABELS.iter().map(|s| s.to_string()).collect());
    for i in 0..per_class {
        for (c, label) in DYNAMIC_LABELS.iter().enumerate() {
            let seq = dynamic_sequence(label, (i * DYNAMIC_WINDOW) as u64, DYNAMIC_WINDOW, sigma, &mut rng)?;
            ds.push(normalize_dynamic(&seq)?, c);
        }
    }
    Ok(ds)
}

/// The first `n` static labels.
pub fn static_labels(n: usize) -> Vec<&'static str> {
    STATIC_LABELS.iter().take(n).copied().collect()
}
