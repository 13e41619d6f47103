use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const TWO_WELL: &str = r#"{
  "grid": {"n": 16, "h_time": 0.0625},
  "lagrangian": {"f_kind": "two_well", "params": {"f_min": -2.0}},
  "sweep": {"seed": 7, "num_perturbations": 3, "amplitude": 0.1, "fourier_degree": 2, "classes": [[0.0, 0.0], [0.5, 0.0]]},
  "integrate": {"state": [0.25, 0.0, 0.0, 2.0], "duration": 1.0, "step": 0.001},
  "verify": {"curve_duration": 1.0, "audit_samples": 20}
}
"#;

fn setup(config: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("config.json"), config).unwrap();
    dir
}

fn aubry(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aubry"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn example_verify_writes_report_and_artifacts() {
    let dir = setup(TWO_WELL);
    let out = aubry(dir.path(), &["example-verify", "--config", "config.json", "--out", "run"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    let report: serde_json::Value = serde_json::from_str(&read(&run, "report.json")).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "example-verify");
    assert_eq!(report["class_counts"][0]["count"], 2);
    assert_eq!(report["alpha"][0]["alpha"], 2.0);
    assert!(report["failures"].as_object().unwrap().is_empty());
    assert!(report.get("timings").is_none());
    assert!(read(&run, "timings.json").contains("verify"));
    assert_eq!(read(&run, "alpha.csv"), "c1,c2,alpha\n0,0,2\n");
    for name in ["classes.json", "measure.json"] {
        serde_json::from_str::<serde_json::Value>(&read(&run, name)).unwrap();
    }
}

#[test]
fn small_grid_is_a_validation_error() {
    let dir = setup(&TWO_WELL.replace("\"n\": 16", "\"n\": 4"));
    let out = aubry(dir.path(), &["alpha", "--config", "config.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.n"));
    assert!(!dir.path().join("out").exists());
    let dir = setup(TWO_WELL);
    assert_eq!(aubry(dir.path(), &["alpha", "--config", "config.json", "--n", "4"]).status.code(), Some(1));
}

#[test]
fn malformed_config_reports_line_and_column() {
    let dir = setup("{\n  \"grid\": {\"n\": 16,\n  \"h_time\": 0.0625,}\n}\n");
    let out = aubry(dir.path(), &["classes", "--config", "config.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3 column"), "{err}");
    let dir = setup(&TWO_WELL.replace("\"grid\"", "\"gird\""));
    assert_eq!(aubry(dir.path(), &["alpha", "--config", "config.json"]).status.code(), Some(1));
    assert_eq!(aubry(dir.path(), &["alpha", "--config", "missing.json"]).status.code(), Some(1));
}

#[test]
fn bad_arguments_exit_one() {
    let dir = setup(TWO_WELL);
    assert_eq!(aubry(dir.path(), &["alpha", "--config", "config.json", "--classes-grid", "5by5"]).status.code(), Some(1));
    assert_eq!(aubry(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(aubry(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn classes_grid_gives_one_row_per_class() {
    let dir = setup(TWO_WELL);
    let out = aubry(dir.path(), &["alpha", "--config", "config.json", "--classes-grid", "5x5", "--out", "a"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&dir.path().join("a"), "alpha.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "c1,c2,alpha");
    assert_eq!(lines.len(), 26);
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("a"), "report.json")).unwrap();
    assert!(report["residuals"]["convexity_defect"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn sweep_is_deterministic() {
    let dir = setup(TWO_WELL);
    for out in ["s1", "s2"] {
        assert_eq!(aubry(dir.path(), &["sweep", "--config", "config.json", "--out", out]).status.code(), Some(0));
    }
    let (a, b) = (dir.path().join("s1"), dir.path().join("s2"));
    assert_eq!(read(&a, "sweep.csv"), read(&b, "sweep.csv"));
    assert_eq!(read(&a, "report.json"), read(&b, "report.json"));
    assert_eq!(read(&a, "sweep.csv").lines().count(), 1 + 3 * 2);
    let report: serde_json::Value = serde_json::from_str(&read(&a, "report.json")).unwrap();
    assert!(report["sweep"]["histogram"].is_object());
    assert!(report["sweep"]["note"].as_str().unwrap().contains("genericity"));

    let out = aubry(dir.path(), &["sweep", "--config", "config.json", "--out", "s3", "--seed", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(read(&a, "sweep.csv"), read(&dir.path().join("s3"), "sweep.csv"));
}

#[test]
fn zero_amplitude_sweep_reproduces_the_baseline() {
    let dir = setup(TWO_WELL);
    let out = aubry(dir.path(), &["sweep", "--config", "config.json", "--amplitude", "0", "--out", "z"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("z"), "report.json")).unwrap();
    let baseline = report["sweep_baseline"].as_array().unwrap();
    let csv = read(&dir.path().join("z"), "sweep.csv");
    for (i, line) in csv.lines().skip(1).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let base = &baseline[i % baseline.len()];
        assert_eq!(fields[3].parse::<f64>().unwrap(), base["alpha"].as_f64().unwrap());
        assert_eq!(fields[4].parse::<u64>().unwrap(), base["class_count"].as_u64().unwrap());
    }
}

#[test]
fn remaining_commands_write_their_artifacts() {
    let dir = setup(TWO_WELL);
    let cases: [(&str, &[&str]); 4] = [
        ("integrate", &["trajectory.csv"]),
        ("potential", &["potential_0.csv", "certificate_0.json"]),
        ("classes", &["classes.json"]),
        ("measure", &["measure.json", "certificate_0.json"]),
    ];
    for (cmd, files) in cases {
        let out = aubry(dir.path(), &[cmd, "--config", "config.json", "--out", cmd]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let run = dir.path().join(cmd);
        assert!(run.join("report.json").exists());
        for f in files {
            assert!(run.join(f).exists(), "{cmd}: {f}");
        }
    }
    let traj = read(&dir.path().join("integrate"), "trajectory.csv");
    assert!(traj.starts_with("t,x,y,v1,v2,w1,w2\n"));
    assert_eq!(traj.lines().count(), 1 + 1001);
    let classes: serde_json::Value = serde_json::from_str(&read(&dir.path().join("classes"), "classes.json")).unwrap();
    assert_eq!(classes[0]["count"], 2);

    let out = aubry(
        dir.path(),
        &["integrate", "--config", "config.json", "--out", "i2", "--state", "-0.1,0.2,1,0", "--duration", "0.5"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&dir.path().join("i2"), "trajectory.csv").lines().count(), 1 + 501);
}
