use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn stepsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stepsim"))
        .args(args)
        .current_dir(cwd)
        .env_remove("STEPSIM_DATA_DIR")
        .output()
        .expect("running stepsim")
}

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Writes a scenario next to copies of the shipped motor and axes files.
fn scenario_dir(body: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(data().join("n33hrlg.params"), dir.path().join("n33hrlg.params")).unwrap();
    fs::copy(data().join("axes.toml"), dir.path().join("axes.toml")).unwrap();
    let path = dir.path().join("case.scenario");
    fs::write(&path, body).unwrap();
    (dir, path)
}

#[test]
fn no_arguments_is_usage() {
    let o = stepsim(&[], Path::new("."));
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_usage() {
    let o = stepsim(&["run", "fig3_20steps", "--frobnicate"], Path::new("."));
    assert_eq!(o.status.code(), Some(64));
    let o = stepsim(&["profile", "wedge", "--distance", "1"], Path::new("."));
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn help_exits_zero() {
    let o = stepsim(&["--help"], Path::new("."));
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn fig3_by_name_reports_36_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let o = stepsim(&["run", "fig3_20steps"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.contains("(36.000 deg)"), "{line}");
    assert!(line.contains("steps issued = 20"), "{line}");
    assert!(line.contains("faults = none"), "{line}");
    let csv = fs::read_to_string(dir.path().join("fig3_20steps.csv")).unwrap();
    // 3.5 s at dt 1e-5 with every 100th sample recorded, plus the end point.
    assert_eq!(csv.lines().count(), 1 + 3501);
}

#[test]
fn data_dir_override() {
    let root = tempfile::tempdir().unwrap();
    fs::create_dir(root.path().join("scenarios")).unwrap();
    fs::copy(data().join("n33hrlg.params"), root.path().join("n33hrlg.params")).unwrap();
    fs::write(
        root.path().join("scenarios/tiny.scenario"),
        "name = \"tiny\"\nmotor = \"../n33hrlg.params\"\n[action]\nkind = \"raw_schedule\"\n\
         clocks = [{ rate = 50.0, n_steps = 2 }]\n[sim]\nduration = 0.2\nrecord_stride = 1000\n",
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_stepsim"))
        .args(["run", "tiny", "--out", "t.csv"])
        .current_dir(root.path())
        .env("STEPSIM_DATA_DIR", root.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("(3.600 deg)"), "{}", stdout(&o));
}

#[test]
fn missing_scenario_exits_one() {
    let o = stepsim(&["run", "no_such_scenario"], Path::new("."));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no_such_scenario"));
}

#[test]
fn missing_motor_file_names_the_path() {
    let (dir, path) = scenario_dir(
        "name = \"m\"\nmotor = \"absent.params\"\n[action]\nkind = \"raw_schedule\"\nclocks = []\n[sim]\nduration = 0.1\n",
    );
    let o = stepsim(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.params"), "{}", stderr(&o));
}

#[test]
fn parse_errors_point_at_the_line() {
    let (dir, path) = scenario_dir(
        "name = \"m\"\nmotor = \"n33hrlg.params\"\n[action]\nkind = \"raw_schedule\"\nclocks = []\n[sim]\nduration = \"long\"\n",
    );
    let o = stepsim(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 7") && err.contains("duration"), "{err}");
}

#[test]
fn exercise_hold_too_long_fails_before_simulating() {
    let (dir, path) = scenario_dir(
        "name = \"ex\"\nmotor = \"n33hrlg.params\"\naxes = \"axes.toml\"\n[action]\nkind = \"exercise\"\n\
         n_steps = 20\ncycle_duration = 5.0\nhold_duration = 5.0\n[sim]\nduration = 10.0\n",
    );
    let o = stepsim(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("hold duration"), "{}", stderr(&o));
    assert!(!dir.path().join("ex.csv").exists());
}

#[test]
fn step_rate_above_ceiling_is_rejected() {
    let (dir, path) = scenario_dir(
        "name = \"fast\"\nmotor = \"n33hrlg.params\"\n[action]\nkind = \"raw_schedule\"\n\
         clocks = [{ rate = 6001.0, n_steps = 10 }]\n[sim]\nduration = 0.1\n",
    );
    let o = stepsim(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("6000"), "{}", stderr(&o));
}

#[test]
fn window_too_short_is_a_fault() {
    let (dir, path) = scenario_dir(
        "name = \"short\"\nmotor = \"n33hrlg.params\"\naxes = \"axes.toml\"\n[action]\nkind = \"straight_move\"\n\
         target = 20\nmode = \"relative\"\n[sim]\nduration = 0.2\nrecord_stride = 100\n",
    );
    let o = stepsim(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("still running"), "{}", stdout(&o));
    assert!(dir.path().join("short.csv").exists());
}

#[test]
fn stall_is_a_fault() {
    let dir = tempfile::tempdir().unwrap();
    let motor = fs::read_to_string(data().join("n33hrlg.params")).unwrap() + "load_torque = 15.0\n";
    fs::write(dir.path().join("loaded.params"), motor).unwrap();
    fs::copy(data().join("axes.toml"), dir.path().join("axes.toml")).unwrap();
    let path = dir.path().join("stall.scenario");
    fs::write(
        &path,
        "name = \"stall\"\nmotor = \"loaded.params\"\naxes = \"axes.toml\"\n[action]\nkind = \"straight_move\"\n\
         target = 20\nmode = \"relative\"\n[sim]\nduration = 2.0\nrecord_stride = 1000\n",
    )
    .unwrap();
    let o = stepsim(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("following_error"), "{}", stdout(&o));
}

#[test]
fn shipped_scenarios_are_byte_stable() {
    for entry in fs::read_dir(data().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let out = dir.path().join("trace.csv");
                let o = stepsim(&["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
                assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), stderr(&o));
                fs::read(&out).unwrap()
            })
            .collect();
        assert!(runs[0].len() > 100, "{}", path.display());
        assert!(runs[0] == runs[1], "{} differs between runs", path.display());
    }
}

/// Phase boundaries read back from the CSV: the times at which the sampled
/// acceleration changes value.
fn acceleration_switches(csv: &str) -> Vec<(f64, f64)> {
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    rows.windows(2).filter(|w| w[0][3] != w[1][3]).map(|w| (w[1][0], w[1][3])).collect()
}

#[test]
fn profile_trapezoid_has_one_nine_one_phases() {
    let o = stepsim(&["profile", "trapezoid", "--distance", "100", "--vmax", "10", "--accel", "10", "--decel", "10"], Path::new("."));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(csv.lines().next(), Some("t,pos_steps,vel_steps_s,acc_steps_s2"));
    assert_eq!(csv.lines().last(), Some("11,100,0,0"));
    let switches = acceleration_switches(&csv);
    assert_eq!(switches, vec![(1.0, 0.0), (10.0, -10.0), (11.0, 0.0)]);
    assert!(stderr(&o).contains("segments 1, 9, 1 s"));
}

#[test]
fn profile_scurve_and_contour_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = stepsim(
        &["profile", "scurve", "--distance", "-50", "--vmax", "20", "--accel", "40", "--decel", "40", "--jerk", "400", "--out", "s.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let last = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(last.lines().last().unwrap().split(',').nth(1) == Some("-50"));

    let o = stepsim(&["profile", "contour", "--waypoints", "0:0,1:5,2:3", "--out", "c.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(fs::read_to_string(dir.path().join("c.csv")).unwrap().lines().last().unwrap().starts_with("2,3,"));
}

#[test]
fn profile_argument_errors() {
    let o = stepsim(&["profile", "scurve", "--distance", "10", "--vmax", "1", "--accel", "1", "--decel", "1"], Path::new("."));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--jerk"));
    let o = stepsim(&["profile", "trapezoid", "--distance", "10", "--vmax", "0", "--accel", "1", "--decel", "1"], Path::new("."));
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn serve_reports_a_busy_port() {
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = held.local_addr().unwrap().port().to_string();
    let config = data().join("axes.toml");
    let o = stepsim(&["serve", "--port", &port, "--config", config.to_str().unwrap()], Path::new("."));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(&port), "{}", stderr(&o));
}

#[test]
fn serve_rejects_a_missing_config() {
    let o = stepsim(&["serve", "--port", "1", "--config", "nowhere/axes.toml"], Path::new("."));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere/axes.toml"));
}
