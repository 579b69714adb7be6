use handswarm_web::{CoverageDemo, FusionDemo, SwarmDemo};

#[test]
fn split_then_merge_through_the_demo_api() {
    let mut d = SwarmDemo::try_new(9, 1).unwrap();
    let echo = d.try_command("split", r#"{"k":2}"#).unwrap();
    assert!(echo.contains("accepted"), "{echo}");
    d.try_step(100).unwrap();
    let mut groups = d.groups();
    groups.sort();
    groups.dedup();
    assert_eq!(groups.len(), 2);
    assert!(d.try_command("merge", r#"{"groups":[1,2]}"#).unwrap().contains("accepted"));
    d.try_step(1).unwrap();
    assert!(d.groups().iter().all(|g| *g == d.groups()[0]));
}

#[test]
fn dragged_sites_stay_in_the_region() {
    let mut c = CoverageDemo::try_new(5, 10.0, 9).unwrap();
    c.move_site(0, 100.0, -100.0);
    assert_eq!(&c.sites()[..2], &[10.0, -10.0]);
    c.move_site(99, 0.0, 0.0);
    assert_eq!(c.iterations(), 0);
    assert!(CoverageDemo::try_new(0, 10.0, 1).is_err());
}

#[test]
fn low_confidence_frames_never_decide() {
    let mut f = FusionDemo::new();
    for _ in 0..200 {
        let v: serde_json::Value = serde_json::from_str(&f.push("rock", 0.89)).unwrap();
        assert!(v["decision"].is_null());
        assert_eq!(v["buffer"].as_array().unwrap().len(), 0);
    }
}
