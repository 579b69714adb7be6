use std::net::UdpSocket;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use handswarm::netproto::{decode, encode, Payload, WireMessage};
use handswarm::scenario::TrajectoryLog;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_handswarm"));
    c.env("HGIC_LOG_LEVEL", "warn");
    c
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_headless(scenario: &Path, out: &Path, seed: Option<u64>) -> serde_json::Value {
    let mut c = bin();
    c.args(["run", "--headless", "--scenario"]).arg(scenario).arg("--out-dir").arg(out);
    if let Some(s) = seed {
        c.args(["--seed", &s.to_string()]);
    }
    serde_json::from_str(&ok(c.output().unwrap())).unwrap()
}

fn free_port() -> u16 {
    UdpSocket::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

struct Kill(Child);

impl Drop for Kill {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn headless_runs_are_reproducible() {
    let s = root().join("scenarios/split-merge.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let m1 = run_headless(&s, a.path(), Some(3));
    let m2 = run_headless(&s, b.path(), Some(3));
    assert_eq!(m1, m2);
    let f = "split-merge.trajectory.csv";
    assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    let c = tempfile::tempdir().unwrap();
    run_headless(&s, c.path(), Some(4));
    assert_ne!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(c.path().join(f)).unwrap());
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("split-merge.metrics.json")).unwrap()).unwrap();
    assert_eq!(written, m1);
}

#[test]
fn metrics_file_has_the_formation_fields() {
    let d = tempfile::tempdir().unwrap();
    let m = run_headless(&root().join("scenarios/circle-to-v.json"), d.path(), None);
    for k in ["duration_s", "max_velocity", "avg_velocity", "avg_spacing_error", "max_spacing_error", "collisions"] {
        assert!(m[k].is_number(), "{k}");
    }
}

#[test]
fn invalid_scenario_fails_with_diagnostics() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("bad.json");
    std::fs::write(&p, r#"{"name":"bad","uav_count":3,"placement":{"kind":"grid","origin":[0,0,10],"spacing":5,"columns":3},"timeline":[{"tick":0,"verb":"warp"}],"duration_s":1}"#).unwrap();
    let out = bin().args(["run", "--scenario"]).arg(&p).arg("--out-dir").arg(d.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown verb"));
}

#[test]
fn replay_matches_the_run_and_rejects_empty_logs() {
    let d = tempfile::tempdir().unwrap();
    let m = run_headless(&root().join("scenarios/emergency-stop.json"), d.path(), None);
    let log = d.path().join("emergency-stop.trajectory.csv");
    let r: serde_json::Value = serde_json::from_str(&ok(bin().args(["replay", "--log"]).arg(&log).output().unwrap())).unwrap();
    assert_eq!(r["collisions"], m["collisions"]);
    assert_eq!(r["max_velocity"], m["max_velocity"]);
    let empty = d.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = bin().args(["replay", "--log"]).arg(&empty).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn replay_rate_scales_wall_clock() {
    let d = tempfile::tempdir().unwrap();
    let s = d.path().join("short.json");
    std::fs::write(&s, r#"{"name":"short","uav_count":4,"placement":{"kind":"grid","origin":[0,0,10],"spacing":5,"columns":2},"initial_mode":"Navigation","timeline":[{"tick":0,"verb":"move_dir","args":{"direction":[1,0,0]}}],"duration_s":2}"#).unwrap();
    run_headless(&s, d.path(), None);
    let log = d.path().join("short.trajectory.csv");
    let play = |rate: &str| -> f64 {
        let v: serde_json::Value =
            serde_json::from_str(&ok(bin().args(["replay", "--play", "--rate", rate, "--log"]).arg(&log).output().unwrap())).unwrap();
        v["wall_clock_s"].as_f64().unwrap()
    };
    let one = play("1");
    let two = play("2");
    assert!((one - 2.0).abs() < 0.2, "1x took {one}");
    assert!((two / one - 0.5).abs() <= 0.05, "1x {one} s, 2x {two} s");
}

#[test]
fn train_and_eval_reports() {
    let d = tempfile::tempdir().unwrap();
    let model = d.path().join("m.json");
    let report = d.path().join("r.txt");
    let text = ok(bin()
        .args(["train", "--kind", "static", "--dataset"])
        .arg(root().join("data/static8.csv"))
        .arg("--out")
        .arg(&model)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap());
    for k in ["Accuracy", "Precision", "Recall", "F-1 Score"] {
        assert!(text.contains(k), "{k}");
    }
    assert_eq!(std::fs::read_to_string(&report).unwrap(), text);
    let eval = || ok(bin().args(["eval", "--model"]).arg(&model).arg("--dataset").arg(root().join("data/static8.csv")).output().unwrap());
    let first = eval();
    assert_eq!(first, eval());
    assert!(first.contains("Accuracy"));
}

#[test]
fn validate_mapping_points_at_the_problem() {
    ok(bin().arg("validate-mapping").arg(root().join("crates/core/assets/default_mapping.json")).output().unwrap());
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("dup.json");
    std::fs::write(&p, "{\n  \"version\": 1,\n  \"global\": {\n    \"fist\": {\"verb\": \"hold\"},\n    \"fist\": {\"verb\": \"land\"}\n  }\n}\n").unwrap();
    let out = bin().arg("validate-mapping").arg(&p).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("duplicate") && err.contains("line 5"), "{err}");
}

fn hover_scenario(dir: &Path, seconds: f64) -> PathBuf {
    let p = dir.join("hover.json");
    std::fs::write(
        &p,
        format!(r#"{{"name":"hover","uav_count":9,"placement":{{"kind":"grid","origin":[0,0,10],"spacing":6,"columns":3}},"initial_mode":"Navigation","timeline":[{{"tick":0,"verb":"move_dir","args":{{"direction":[1,0,0],"distance":200}}}}],"duration_s":{seconds}}}"#),
    )
    .unwrap();
    p
}

fn spawn_live(dir: &Path, scenario: &Path, ports: (u16, u16, u16), extra: &[&str]) -> Kill {
    let child = bin()
        .args(["run", "--live", "--scenario"])
        .arg(scenario)
        .arg("--out-dir")
        .arg(dir)
        .args(["--ports", &format!("{},{},{}", ports.0, ports.1, ports.2)])
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    Kill(child)
}

#[test]
fn live_run_acks_dedupes_and_streams_telemetry() {
    let d = tempfile::tempdir().unwrap();
    let scenario = hover_scenario(d.path(), 4.0);
    let telemetry = UdpSocket::bind("127.0.0.1:0").unwrap();
    telemetry.set_read_timeout(Some(Duration::from_millis(200))).unwrap();
    let ports = (free_port(), telemetry.local_addr().unwrap().port(), free_port());
    let mut live = spawn_live(d.path(), &scenario, ports, &["--rate", "10"]);

    let mut buf = [0u8; 2048];
    let deadline = Instant::now() + Duration::from_secs(3);
    let mut snapshots = 0;
    while snapshots < 3 && Instant::now() < deadline {
        if let Ok(n) = telemetry.recv(&mut buf) {
            let m = decode(&buf[..n]).unwrap();
            assert!(matches!(m.payload, Payload::Telemetry(_)));
            snapshots += 1;
        }
    }
    assert_eq!(snapshots, 3, "no telemetry");

    let to = format!("127.0.0.1:{}", ports.0);
    let send = || ok(bin().args(["send", "--to", &to, "--verb", "emergency_stop", "--seq-start", "7"]).output().unwrap());
    let first = send();
    assert!(first.contains("received") && first.contains("\"accepted\""), "{first}");
    let again = send();
    assert!(again.contains("duplicate"), "{again}");

    let status = live.0.wait().unwrap();
    assert!(status.success());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("hover.metrics.json")).unwrap()).unwrap();
    // the timeline command plus one emergency stop
    assert_eq!(m["commands"]["accepted"], 2);
    // the second sender is a new stream, so the controller catches the replay
    assert_eq!(m["commands"]["duplicate"], 1);
    let log = TrajectoryLog::load(d.path().join("hover.trajectory.csv")).unwrap();
    assert!(log.frames.last().unwrap().uavs.iter().all(|u| u.velocity.norm() == 0.0));
}

#[test]
fn keypoint_stream_drives_the_swarm() {
    let d = tempfile::tempdir().unwrap();
    let data = d.path().join("static16.csv");
    ok(bin().args(["gen-dataset", "--kind", "static", "--classes", "16", "--per-class", "120", "--seed", "5", "--out"]).arg(&data).output().unwrap());
    let model = d.path().join("static16.json");
    ok(bin().args(["train", "--dataset"]).arg(&data).arg("--out").arg(&model).output().unwrap());

    let scenario = hover_scenario(d.path(), 8.0);
    let telemetry = UdpSocket::bind("127.0.0.1:0").unwrap();
    let ports = (free_port(), telemetry.local_addr().unwrap().port(), free_port());
    let mut live = spawn_live(d.path(), &scenario, ports, &["--model", model.to_str().unwrap()]);
    std::thread::sleep(Duration::from_millis(500));

    let text = std::fs::read_to_string(root().join("data/sample_keypoints.jsonl")).unwrap();
    let tx = UdpSocket::bind("127.0.0.1:0").unwrap();
    for (i, line) in text.lines().enumerate() {
        let frame = serde_json::from_str(line).unwrap();
        let bytes = encode(&WireMessage::new(i as u64 + 1, 0, Payload::Keypoints(frame))).unwrap();
        tx.send_to(&bytes, ("127.0.0.1", ports.2)).unwrap();
        std::thread::sleep(Duration::from_millis(3));
    }
    assert!(live.0.wait().unwrap().success());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("hover.metrics.json")).unwrap()).unwrap();
    // move_dir from the timeline, then victory -> Formation, rock -> V, fist -> stop
    assert_eq!(m["commands"]["accepted"], 4, "{m}");
    let log = TrajectoryLog::load(d.path().join("hover.trajectory.csv")).unwrap();
    assert!(log.frames.last().unwrap().uavs.iter().all(|u| u.velocity.norm() == 0.0));
}

#[test]
fn bridge_relays_both_ways() {
    let command_sink = UdpSocket::bind("127.0.0.1:0").unwrap();
    command_sink.set_read_timeout(Some(Duration::from_secs(3))).unwrap();
    let telemetry_port = free_port();
    let ws_port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let _bridge = Kill(
        bin()
            .args(["bridge", "--ws-port", &ws_port.to_string(), "--telemetry-port", &telemetry_port.to_string()])
            .args(["--command-to", &command_sink.local_addr().unwrap().to_string()])
            .spawn()
            .unwrap(),
    );
    let deadline = Instant::now() + Duration::from_secs(5);
    let (mut ws, _) = loop {
        match tungstenite::connect(format!("ws://127.0.0.1:{ws_port}")) {
            Ok(c) => break c,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => panic!("{e}"),
        }
    };
    let cmd = WireMessage::new(
        3,
        0,
        Payload::Command(handswarm::Command::new(3, 0, handswarm::Action::Hold {})),
    );
    let text = String::from_utf8(encode(&cmd).unwrap()).unwrap();
    ws.send(tungstenite::Message::text(text.clone())).unwrap();
    let mut buf = [0u8; 2048];
    let (n, _) = command_sink.recv_from(&mut buf).unwrap();
    assert_eq!(&buf[..n], text.as_bytes());

    ws.send(tungstenite::Message::text("{\"version\":1}")).unwrap();
    let reply = ws.read().unwrap().into_text().unwrap();
    assert!(reply.contains("error"), "{reply}");

    // a 4-UAV snapshot from a throwaway engine
    let s = handswarm::scenario::Scenario::parse(r#"{"name":"t","uav_count":4,"placement":{"kind":"grid","origin":[0,0,10],"spacing":5,"columns":2},"timeline":[],"duration_s":1}"#).unwrap();
    let engine = s.build_engine().unwrap();
    let snap = handswarm::netproto::telemetry_snapshot(&engine, None);
    let parts = handswarm::netproto::encode_telemetry(&snap, 1, 0).unwrap();
    let tx = UdpSocket::bind("127.0.0.1:0").unwrap();
    for p in &parts {
        tx.send_to(p, ("127.0.0.1", telemetry_port)).unwrap();
    }
    let got = ws.read().unwrap().into_text().unwrap();
    let m = decode(got.as_bytes()).unwrap();
    let Payload::Telemetry(t) = m.payload else { panic!() };
    assert_eq!(t.size, 4);
    assert_eq!(t.uavs.len(), 4);
}
