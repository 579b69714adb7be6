//! Random generators shared by the integration suites.
#![allow(dead_code)]

use handswarm::command::{Action, Command, Mode, Scope};
use handswarm::controller::{DispatchStatus, Echo};
use handswarm::formation::FormationKind;
use handswarm::geom::{Rect, Vec2, Vec3};
use handswarm::gesture::KeypointFrame;
use handswarm::netproto::{AckPayload, AckStatus, Payload, WireMessage};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn vec3<R: Rng>(rng: &mut R, span: f64) -> Vec3 {
    Vec3::new(rng.random_range(-span..span), rng.random_range(-span..span), rng.random_range(-span..span))
}

pub fn kind<R: Rng>(rng: &mut R) -> FormationKind {
    *[FormationKind::V, FormationKind::Circle, FormationKind::Line].choose(rng).unwrap()
}

pub fn mode<R: Rng>(rng: &mut R) -> Mode {
    *Mode::ALL.choose(rng).unwrap()
}

fn maybe<R: Rng, T>(rng: &mut R, f: impl FnOnce(&mut R) -> T) -> Option<T> {
    if rng.random_bool(0.5) {
        Some(f(rng))
    } else {
        None
    }
}

/// Any action with well-formed arguments. Semantic validity (known group
/// ids, sensible radii) is not guaranteed.
pub fn action<R: Rng>(rng: &mut R) -> Action {
    match rng.random_range(0..14) {
        0 => Action::MoveDir {
            direction: vec3(rng, 1.0) + Vec3::new(0.01, 0.0, 0.0),
            distance: maybe(rng, |r| r.random_range(1.0..100.0)),
            group: maybe(rng, |r| r.random_range(1..4)),
        },
        1 => Action::SetFormation {
            kind: kind(rng),
            scale: maybe(rng, |r| r.random_range(2.0..20.0)),
            heading: maybe(rng, |r| r.random_range(-3.0..3.0)),
            center: maybe(rng, |r| vec3(r, 50.0)),
            group: maybe(rng, |r| r.random_range(1..4)),
        },
        2 => Action::Expand {
            factor: maybe(rng, |r| r.random_range(0.5..2.0)),
            group: maybe(rng, |r| r.random_range(1..4)),
        },
        3 => Action::Split { k: rng.random_range(1..5) },
        4 => Action::Merge {
            groups: (0..rng.random_range(1..4)).map(|_| rng.random_range(1..5)).collect(),
        },
        5 => Action::StartSearch {
            center: vec3(rng, 50.0),
            radius: rng.random_range(10.0..80.0),
            lane_spacing: rng.random_range(5.0..30.0),
            formation: maybe(rng, kind),
            group: maybe(rng, |r| r.random_range(1..4)),
        },
        6 => Action::StartTrack {
            target_id: rng.random_range(0..12),
            perception_range: maybe(rng, |r| r.random_range(50.0..200.0)),
            standoff_radius: maybe(rng, |r| r.random_range(2.0..20.0)),
            group: maybe(rng, |r| r.random_range(1..4)),
        },
        7 => {
            let a = Vec2::new(rng.random_range(-80.0..0.0), rng.random_range(-80.0..0.0));
            Action::StartCoverage {
                region: Rect::new(a, a + Vec2::new(rng.random_range(10.0..80.0), rng.random_range(10.0..80.0))),
                tolerance: maybe(rng, |r| r.random_range(0.01..1.0)),
                max_iters: maybe(rng, |r| r.random_range(1..50)),
                altitude: maybe(rng, |r| r.random_range(5.0..40.0)),
                group: maybe(rng, |r| r.random_range(1..4)),
            }
        }
        8 => Action::SetGroupCount { count: rng.random_range(1..5) },
        9 => Action::SetParam {
            path: ["flocking.v_mig", "formation.k_f", "formation.circle_radius", "landing_speed"]
                .choose(rng)
                .unwrap()
                .to_string(),
            value: rng.random_range(0.5..8.0),
        },
        10 => Action::Hold {},
        11 => Action::Land {},
        12 => Action::EmergencyStop {},
        _ => Action::SwitchMode { mode: mode(rng) },
    }
}

/// A command whose mode may or may not match the current controller mode.
pub fn command<R: Rng>(rng: &mut R, seq: u64) -> Command {
    let a = action(rng);
    let mut c = Command::new(seq, rng.random_range(0..10_000), a);
    if c.scope == Scope::Global && c.verb() != "switch_mode" && rng.random_bool(0.5) {
        c.mode = mode(rng);
    }
    c
}

pub fn keypoints<R: Rng>(rng: &mut R) -> KeypointFrame {
    KeypointFrame {
        frame_index: rng.random_range(0..1_000_000),
        points: (0..21).map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect(),
        detection_confidence: rng.random_range(0.0..=1.0),
    }
}

pub fn echo<R: Rng>(rng: &mut R) -> Echo {
    let status = *[DispatchStatus::Accepted, DispatchStatus::Rejected, DispatchStatus::Duplicate]
        .choose(rng)
        .unwrap();
    Echo {
        seq: rng.random(),
        verb: action(rng).verb().to_string(),
        status,
        reason: (status == DispatchStatus::Rejected).then(|| "mode mismatch: \"quoted\" \\ é".to_string()),
    }
}

/// A message of any kind except telemetry, which needs an engine.
pub fn message<R: Rng>(rng: &mut R, seq: u64) -> WireMessage {
    let payload = match rng.random_range(0..4) {
        0 => {
            let s = rng.random();
            Payload::Command(command(rng, s))
        }
        1 => Payload::Keypoints(keypoints(rng)),
        2 => Payload::Ack(AckPayload {
            seq: rng.random(),
            status: if rng.random_bool(0.5) { AckStatus::Received } else { AckStatus::Duplicate },
        }),
        _ => Payload::Echo(echo(rng)),
    };
    WireMessage::new(seq, rng.random_range(0..u64::MAX / 2), payload)
}
