use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cloplan::codec::decode;
use cloplan::collision::path_conflicts;
use cloplan::export::read_trajectory_csv;
use cloplan::plan::plan_motion;
use cloplan::{PathBoundaryCondition, Pose2D, VehicleLimits};
use tempfile::TempDir;

fn cloplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cloplan")).args(args).output().expect("binary runs")
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario(name: &str) -> String {
    scenarios().join(name).to_string_lossy().into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn out(dir: &TempDir, sub: &str) -> String {
    dir.path().join(sub).to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn left_turn_plan_reaches_the_waypoint() {
    let tmp = TempDir::new().unwrap();
    let o = cloplan(&["plan", &scenario("left_turn.json"), "--out-dir", &out(&tmp, "p"), "--svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["plan.json", "plan.bin", "trajectory.csv", "plan.svg"] {
        assert!(tmp.path().join("p").join(f).exists(), "{f}");
    }
    let rows = read_trajectory_csv(&fs::read_to_string(tmp.path().join("p/trajectory.csv")).unwrap()).unwrap();
    let end = rows.last().unwrap();
    assert!((end.x - 14.5).abs() < 1e-6 && (end.y - 21.5).abs() < 1e-6, "{end:?}");
    assert!((end.psi - FRAC_PI_2).abs() < 1e-8);
    assert_eq!(fs::read(tmp.path().join("p/plan.bin")).unwrap().len(), 162);
}

#[test]
fn straight_plan_is_ten_metres() {
    let tmp = TempDir::new().unwrap();
    let o = cloplan(&["plan", &scenario("straight.json"), "--out-dir", &out(&tmp, "p")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_trajectory_csv(&fs::read_to_string(tmp.path().join("p/trajectory.csv")).unwrap()).unwrap();
    let end = rows.last().unwrap();
    assert!((end.s - 10.0).abs() < 1e-9 && (end.x - 10.0).abs() < 1e-9 && end.y.abs() < 1e-12);
    assert!(!tmp.path().join("p/plan.svg").exists());
}

#[test]
fn tunable_grid_picks_the_quickest_feasible_candidate() {
    let tmp = TempDir::new().unwrap();
    let o = cloplan(&["plan", &scenario("tunable_grid.json"), "--out-dir", &out(&tmp, "p")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("p/plan.json")).unwrap()).unwrap();
    let t = report["total_time_s"].as_f64().unwrap();
    let bc = PathBoundaryCondition::new(14.5, 21.5, FRAC_PI_2, 0.0, 0.0);
    for s in [3.0, 5.0, 7.0] {
        if let Ok(p) = plan_motion(&bc, s, s, 5.0, Pose2D::origin(), &VehicleLimits::default()) {
            assert!(t <= p.velocity.total_time().unwrap() + 1e-12);
        }
    }
    assert!(report["scenario"].get("tunables").is_none());
}

#[test]
fn infeasible_and_unsolvable_waypoints_exit_with_their_codes() {
    let tmp = TempDir::new().unwrap();
    let far = write(&tmp, "far.json", r#"{"dx_m": -10, "dy_m": -1, "dpsi_rad": 0}"#);
    let o = cloplan(&["plan", &far, "--out-dir", &out(&tmp, "a")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("exit=3 reason=infeasible_curvature"), "{}", stderr(&o));
    assert_eq!(stderr(&o).lines().count(), 1);

    let tight = write(&tmp, "tight.json", r#"{"dx_m": 0.3, "dy_m": 0.3, "dpsi_rad": -3.0}"#);
    let o = cloplan(&["plan", &tight, "--out-dir", &out(&tmp, "b")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("reason=no_convergence"));

    let fast = write(&tmp, "fast.json", r#"{"dx_m": 10, "dy_m": 0, "dpsi_rad": 0, "v0_mps": 40}"#);
    let o = cloplan(&["plan", &fast, "--out-dir", &out(&tmp, "c")]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("reason=speed_plan"));
}

#[test]
fn malformed_input_exits_one_naming_the_field() {
    let tmp = TempDir::new().unwrap();
    let bad = write(&tmp, "bad.json", r#"{"dx": 10, "dy_m": 0, "dpsi_rad": 0}"#);
    let o = cloplan(&["plan", &bad, "--out-dir", &out(&tmp, "a")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown field `dx`"), "{}", stderr(&o));

    let nan = write(&tmp, "nan.json", r#"{"dx_m": 10, "dy_m": 0, "dpsi_rad": 0, "s0_m": -1}"#);
    assert_eq!(cloplan(&["plan", &nan, "--out-dir", &out(&tmp, "b")]).status.code(), Some(1));
    assert_eq!(cloplan(&["plan", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(cloplan(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cloplan(&["--help"]).status.code(), Some(0));
}

#[test]
fn limits_and_geometry_files_override_defaults() {
    let tmp = TempDir::new().unwrap();
    let limits = write(&tmp, "limits.json", r#"{"gamma_max_rad": 0.25}"#);
    let o = cloplan(&["plan", &scenario("left_turn.json"), "--limits-file", &limits, "--out-dir", &out(&tmp, "a")]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let bad = write(&tmp, "bad_limits.json", r#"{"j_max_mps3": -1}"#);
    assert_eq!(cloplan(&["plan", &scenario("left_turn.json"), "--limits-file", &bad]).status.code(), Some(1));

    let wide = write(&tmp, "wide.json", r#"{"width_m": 2.5}"#);
    let o = cloplan(&["sweep", &scenario("straight.json"), "--geometry-file", &wide, "--out-dir", &out(&tmp, "s")]);
    assert_eq!(o.status.code(), Some(0));
    let b: cloplan::swept::SweptBoundary = serde_json::from_str(&fs::read_to_string(tmp.path().join("s/swept.json")).unwrap()).unwrap();
    assert!((b.area() - 2.5 * 14.8).abs() < 1e-9, "{}", b.area());
}

#[test]
fn decode_and_encode_round_trip_the_plan_outputs() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(cloplan(&["plan", &scenario("left_turn.json"), "--out-dir", &out(&tmp, "p")]).status.code(), Some(0));
    let bin = out(&tmp, "p/plan.bin");
    let o = cloplan(&["decode", &bin, "--ds", "0.1", "--out-dir", &out(&tmp, "d")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains(" ms"));
    assert_eq!(fs::read(tmp.path().join("p/trajectory.csv")).unwrap(), fs::read(tmp.path().join("d/trajectory.csv")).unwrap());

    let o = cloplan(&["encode", &out(&tmp, "p/plan.json"), "--out-dir", &out(&tmp, "e")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&bin).unwrap(), fs::read(tmp.path().join("e/plan.bin")).unwrap());

    let mut bytes = fs::read(&bin).unwrap();
    bytes[40] ^= 0xff;
    let broken = tmp.path().join("broken.bin");
    fs::write(&broken, &bytes).unwrap();
    let o = cloplan(&["decode", broken.to_str().unwrap(), "--out-dir", &out(&tmp, "x")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("checksum"), "{}", stderr(&o));
    let o = cloplan(&["decode", &out(&tmp, "p/plan.json"), "--out-dir", &out(&tmp, "x")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    for run in ["one", "two"] {
        assert_eq!(cloplan(&["plan", &scenario("left_turn.json"), "--out-dir", &out(&tmp, run), "--svg"]).status.code(), Some(0));
        assert_eq!(cloplan(&["sweep", &scenario("left_turn.json"), "--out-dir", &out(&tmp, run)]).status.code(), Some(0));
    }
    for f in ["plan.json", "plan.bin", "trajectory.csv", "plan.svg", "swept.json", "swept.csv"] {
        assert_eq!(fs::read(tmp.path().join("one").join(f)).unwrap(), fs::read(tmp.path().join("two").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn mirrored_lane_changes_conflict() {
    // two lane changes mirrored about y = 2 cross at the same time
    let tmp = TempDir::new().unwrap();
    let a = write(&tmp, "a.json", r#"{"dx_m": 30, "dy_m": 4, "dpsi_rad": 0, "s0_m": 8, "s2_m": 8, "v0_mps": 8}"#);
    let b = write(
        &tmp,
        "b.json",
        r#"{"dx_m": 30, "dy_m": -4, "dpsi_rad": 0, "s0_m": 8, "s2_m": 8, "v0_mps": 8, "origin": {"y_m": 4}}"#,
    );
    let o = cloplan(&["conflict", &a, &b, "--gap-threshold", "1.0", "--out-dir", &out(&tmp, "c"), "--svg"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(tmp.path().join("c/conflict.svg").exists());

    // oracle: the library call on the same plans
    let lim = VehicleLimits::default();
    let pa = plan_motion(&PathBoundaryCondition::new(30.0, 4.0, 0.0, 0.0, 0.0), 8.0, 8.0, 8.0, Pose2D::origin(), &lim).unwrap();
    let pb = plan_motion(&PathBoundaryCondition::new(30.0, -4.0, 0.0, 0.0, 0.0), 8.0, 8.0, 8.0, Pose2D::new(0.0, 4.0, 0.0), &lim).unwrap();
    let want = path_conflicts(&pa, &pb, 1.0).unwrap();
    assert!(want.has_conflict());
    let got: cloplan::collision::ConflictReport = serde_json::from_str(&fs::read_to_string(tmp.path().join("c/conflict.json")).unwrap()).unwrap();
    assert_eq!(got, want);
    assert_eq!(got.intersections.len(), 1);
    let c = got.intersections[0];
    assert!((c.point[1] - 2.0).abs() < 1e-9 && c.time_gap < 1e-9);
}

#[test]
fn intersection_scenarios_follow_the_target_choice() {
    let tmp = TempDir::new().unwrap();
    let run = |a: &str, b: &str| cloplan(&["conflict", &scenario(a), &scenario(b), "--gap-threshold", "1.0", "--out-dir", &out(&tmp, "c")]).status.code();
    assert_eq!(run("green_to_red.json", "blue_to_red.json"), Some(4));
    assert_eq!(run("green_to_blue.json", "blue_to_blue.json"), Some(0));
    assert_eq!(run("green_to_blue.json", "blue_to_red.json"), Some(0));
    assert_eq!(run("green_to_red.json", "blue_to_blue.json"), Some(4));
    // a single file carrying the second agent
    let both = write(
        &tmp,
        "both.json",
        &fs::read_to_string(scenarios().join("green_to_blue.json")).unwrap().replacen(
            '{',
            &format!("{{\"agent_b\": {},", fs::read_to_string(scenarios().join("blue_to_red.json")).unwrap()),
            1,
        ),
    );
    assert_eq!(cloplan(&["conflict", &both, "--out-dir", &out(&tmp, "d")]).status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("d/conflict.json")).unwrap()).unwrap();
    assert_eq!(report["intersections"].as_array().unwrap().len(), 0);
}

#[test]
fn chart_is_symmetric_about_the_diagonal() {
    let tmp = TempDir::new().unwrap();
    let o = cloplan(&["chart", "--dpsi", "1.5707963267948966", "--kappa0", "0", "--s0", "5", "--resolution", "1.0", "--out-dir", &out(&tmp, "c"), "--svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("c/chart.csv")).unwrap();
    assert!(text.starts_with("dx,dy,side\n"));
    let pts: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",boundary"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert!(pts.len() > 20);
    for &(x, y) in &pts {
        let d = pts.iter().map(|&(u, v)| (u - y).hypot(v - x)).fold(f64::INFINITY, f64::min);
        assert!(d <= 1.0 * std::f64::consts::SQRT_2, "({x}, {y}) has no mirror, nearest {d}");
    }
    assert!(tmp.path().join("c/chart.svg").exists());
}

#[test]
fn thread_cap_is_validated() {
    let tmp = TempDir::new().unwrap();
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_cloplan"))
            .env("CLOPLAN_THREADS", v)
            .args(["plan", &scenario("straight.json"), "--out-dir", &out(&tmp, "t")])
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("1"), Some(0));
    assert_eq!(run("zero"), Some(1));
}

#[test]
fn plan_bin_decodes_in_process() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(cloplan(&["plan", &scenario("left_turn.json"), "--out-dir", &out(&tmp, "p")]).status.code(), Some(0));
    let plan = decode(&fs::read(tmp.path().join("p/plan.bin")).unwrap()).unwrap();
    assert!((plan.path.s_f() - 29.96).abs() < 0.01);
}
