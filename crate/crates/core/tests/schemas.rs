mod common;

use std::path::PathBuf;

use handswarm::controller::ControlParams;
use handswarm::engine::Engine;
use handswarm::geom::{Aabb, Vec3};
use handswarm::mapping::DEFAULT_MAPPING;
use handswarm::netproto::{encode, encode_telemetry, telemetry_snapshot, RecognitionStatus};
use handswarm::world::{Limits, SwarmWorld, UavState};
use handswarm::{Action, Command};
use jsonschema::{Resource, Validator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const BASE: &str = "https://handswarm.invalid/schemas/";
const NAMES: [&str; 8] = ["command", "echo", "ack", "keypoints", "telemetry", "message", "mapping", "scenario"];

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema(name: &str) -> Value {
    let text = std::fs::read_to_string(root().join("schemas").join(format!("{name}.schema.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn validator(name: &str) -> Validator {
    let mut opts = jsonschema::options();
    for n in NAMES {
        opts = opts.with_resource(format!("{BASE}{n}.schema.json"), Resource::from_contents(schema(n)).unwrap());
    }
    opts.build(&schema(name)).unwrap()
}

fn assert_valid(v: &Validator, instance: &Value) {
    let errors: Vec<String> = v.iter_errors(instance).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:?}\n{instance}");
}

#[test]
fn generated_messages_match_the_wire_schema() {
    let v = validator("message");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seq in 0..2000 {
        let m = common::message(&mut rng, seq);
        let bytes = encode(&m).unwrap();
        assert_valid(&v, &serde_json::from_slice(&bytes).unwrap());
    }
}

#[test]
fn telemetry_parts_match_the_wire_schema() {
    let v = validator("message");
    let uavs = (0..40).map(|i| UavState::at(i, Vec3::new((i % 8) as f64 * 7.0, (i / 8) as f64 * 7.0, 20.0))).collect();
    let region = Aabb::new(Vec3::new(-500.0, -500.0, 0.0), Vec3::new(500.0, 500.0, 120.0));
    let world = SwarmWorld::new(uavs, region, 0.02, Limits::default(), 0).unwrap();
    let mut e = Engine::new(world, ControlParams::default()).unwrap();
    e.submit(Command::new(1, 0, Action::EmergencyStop {}));
    e.submit(Command::new(2, 0, Action::Split { k: 3 }));
    e.tick().unwrap();
    let rec = RecognitionStatus {
        last_label: Some("fist".into()),
        ..Default::default()
    };
    let parts = encode_telemetry(&telemetry_snapshot(&e, Some(rec)), 1, 5).unwrap();
    assert!(parts.len() > 1);
    for p in parts {
        assert_valid(&v, &serde_json::from_slice(&p).unwrap());
    }
}

#[test]
fn wrong_payloads_fail_the_schema() {
    let v = validator("message");
    let bad = [
        r#"{"version":2,"kind":"ack","seq":1,"timestamp_ms":0,"payload":{"seq":1,"status":"received"}}"#,
        r#"{"version":1,"kind":"ack","seq":1,"timestamp_ms":0,"payload":{"seq":1,"status":"lost"}}"#,
        r#"{"version":1,"kind":"command","seq":1,"timestamp_ms":0,"payload":{"seq":1,"mode":"Safety","scope":"Local","verb":"hold","args":{}}}"#,
        r#"{"version":1,"kind":"command","seq":1,"timestamp_ms":0,"payload":{"seq":1,"mode":"Formation","scope":"Local","verb":"split","args":{}}}"#,
        r#"{"version":1,"kind":"keypoints","seq":1,"timestamp_ms":0,"payload":{"frame_index":0,"points":[],"detection_confidence":1}}"#,
    ];
    for b in bad {
        assert!(!v.is_valid(&serde_json::from_str(b).unwrap()), "{b}");
    }
}

#[test]
fn bundled_files_match_their_schemas() {
    assert_valid(&validator("mapping"), &serde_json::from_str(DEFAULT_MAPPING).unwrap());
    let sv = validator("scenario");
    for entry in std::fs::read_dir(root().join("scenarios")).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            assert_valid(&sv, &serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap());
        }
    }
    let kv = validator("keypoints");
    let text = std::fs::read_to_string(root().join("data/sample_keypoints.jsonl")).unwrap();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        assert_valid(&kv, &serde_json::from_str(line).unwrap());
    }
}
