mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::repo_root;
use nnreach::controllers::{quadrotor_controller, vehicle_controller};
use nnreach::reach::ReachTube;
use nnreach::{FeedForwardNetwork, IntervalBox};

fn nnreach(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nnreach"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn quad_scenario() -> String {
    repo_root().join("scenarios/quadrotor6d.json").display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_scenario_is_a_config_error_naming_the_path() {
    let o = nnreach(&["reach", "--scenario", "/no/such/scenario.json"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("/no/such/scenario.json"), "{}", text(&o));
}

#[test]
fn non_power_of_two_partition_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = nnreach(&["reach", "--scenario", &quad_scenario(), "--Da", "3", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("power of two"), "{}", text(&o));
}

#[test]
fn reach_then_plotdata_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = nnreach(&["reach", "--scenario", &quad_scenario(), "--out", s(out)]);
    assert!(o.status.success(), "{}", text(&o));
    for f in ["tube.json", "tube.csv", "safety.json", "timing.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let tube_path = out.join("tube.json");
    let tube = ReachTube::load(&tube_path).unwrap();
    assert_eq!(tube.len(), 13);

    let o = nnreach(&["plotdata", "--tube", s(&tube_path), "--dims", "0,1"]);
    assert!(o.status.success(), "{}", text(&o));
    let csv = String::from_utf8_lossy(&o.stdout);
    assert!(csv.lines().count() > tube.len());

    let o = nnreach(&["plotdata", "--tube", s(&tube_path), "--dims", "0,9"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));

    let o = nnreach(&[
        "validate", "--scenario", &quad_scenario(), "--tube", s(&tube_path), "--samples", "200", "--out", s(out),
    ]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("0 violations / 12 frames"), "{}", text(&o));

    let o = nnreach(&[
        "validate", "--scenario", &quad_scenario(), "--tube", s(&tube_path), "--samples", "0", "--out", s(out),
    ]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("0 violations"));

    // move frames 4 and 7 far away
    let mut bad = tube.clone();
    for j in [4, 7] {
        bad.frames[j] = vec![IntervalBox::point(&[100.0; 6])];
    }
    let bad_path = out.join("bad.json");
    std::fs::write(&bad_path, bad.to_json()).unwrap();
    let o = nnreach(&[
        "validate", "--scenario", &quad_scenario(), "--tube", s(&bad_path), "--samples", "50", "--out", s(out),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    let t = text(&o);
    assert!(t.contains("frame 4:") && t.contains("frame 7:"), "{t}");
    assert!(!t.contains("frame 5:"), "{t}");
}

#[test]
fn compare_reports_nesting() {
    let dir = tempfile::tempdir().unwrap();
    let o = nnreach(&[
        "compare", "--scenario", &quad_scenario(), "--strategies", "hybrid,linear,linear-hybrid", "--out", s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("Lin ⊆ LinH: PASS"), "{}", text(&o));
    let csv = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
}

#[test]
fn bounds_prints_an_output_box() {
    let net = repo_root().join("networks/quadrotor6d.json");
    let o = nnreach(&[
        "bounds", "--network", s(&net), "--lower", "-0.1,-0.1,-0.1,-0.1,-0.1,-0.1", "--upper", "0.1,0.1,0.1,0.1,0.1,0.1",
    ]);
    assert!(o.status.success(), "{}", text(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lo = v["output_box"]["lower"].as_array().unwrap();
    assert_eq!(lo.len(), 3);

    let o = nnreach(&["bounds", "--network", s(&net), "--lower", "0", "--upper", "1", "--relu-lower", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_networks_match_the_builders() {
    let root = repo_root().join("networks");
    assert_eq!(FeedForwardNetwork::load(root.join("vehicle.json")).unwrap(), vehicle_controller());
    assert_eq!(FeedForwardNetwork::load(root.join("quadrotor6d.json")).unwrap(), quadrotor_controller(9.8));

    let dir = tempfile::tempdir().unwrap();
    let o = nnreach(&["controllers", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", text(&o));
    for f in ["vehicle.json", "quadrotor6d.json"] {
        let a = std::fs::read(root.join(f)).unwrap();
        let b = std::fs::read(dir.path().join(f)).unwrap();
        assert!(a == b, "{f} differs from a fresh build");
    }
}
