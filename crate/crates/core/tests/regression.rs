//! Frame hulls of the shipped scenarios, frozen. Set `NNREACH_BLESS=1` to rewrite
//! the fixtures after an intended change.

mod common;

use std::path::PathBuf;

use nnreach::parallel::Workers;
use nnreach::reach::run_algorithm1;
use nnreach::IntervalBox;

const TOL: f64 = 1e-9;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}_hulls.json"))
}

fn check(name: &str, d_a: usize) {
    let sc = common::scenario(name);
    let mut settings = sc.config.settings();
    settings.d_a = d_a;
    let run = run_algorithm1(&sc.closed_loop, &sc.initial, &sc.disturbance, &settings, &Workers::sequential()).unwrap();
    let hulls = run.tube.hulls();
    let path = fixture(name);
    if std::env::var_os("NNREACH_BLESS").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&hulls).unwrap() + "\n").unwrap();
        return;
    }
    let frozen: Vec<IntervalBox> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(frozen.len(), hulls.len());
    for (j, (a, b)) in frozen.iter().zip(&hulls).enumerate() {
        for i in 0..a.dim() {
            let dl = (a.lower()[i] - b.lower()[i]).abs();
            let du = (a.upper()[i] - b.upper()[i]).abs();
            assert!(dl <= TOL && du <= TOL, "{name} frame {j} coord {i}: drift {dl:e} / {du:e}");
        }
    }
}

#[test]
fn vehicle_hybrid_single_partition() {
    check("vehicle", 1);
}

#[test]
fn quadrotor_linear() {
    check("quadrotor6d", 1);
}
