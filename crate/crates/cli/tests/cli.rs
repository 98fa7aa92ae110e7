use std::path::Path;
use std::process::{Command, Output};

use curvecast::experiment::read_csv;

fn curvecast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvecast")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "preset = \"study2\"\nvirtual_participants = 2\nrepetitions = 2\n";

#[test]
fn simulate_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("t.csv");
    let o = curvecast(&["simulate", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("288 trials"), "{stdout}");
    assert_eq!(read_csv(&out).unwrap().len(), 2 * 6 * 6 * 2 * 2);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("t.csv");
    let o = curvecast(&[
        "simulate", "--config", &cfg, "--preset", "study1", "--participants", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    // One participant, study-1 grid, two repetitions from the file.
    assert_eq!(read_csv(&out).unwrap().len(), 6 * 6 * 2);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        assert_eq!(curvecast(&["simulate", "--config", &cfg, "--seed", "9", "--out", p.to_str().unwrap()]).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    curvecast(&["simulate", "--config", &cfg, "--seed", "10", "--out", c.to_str().unwrap()]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let out = out.to_str().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(curvecast(&["simulate", "--config", missing.to_str().unwrap(), "--out", out]).status.code(), Some(2));
    let unknown = write_config(dir.path(), "unknown.toml", "lamda = 20\n");
    assert_eq!(curvecast(&["simulate", "--config", &unknown, "--out", out]).status.code(), Some(2));
    let infeasible = write_config(dir.path(), "far.toml", "[[tasks]]\namplitude_m = 40.0\nwidth_m = 0.2\n");
    assert_eq!(curvecast(&["simulate", "--config", &infeasible, "--out", out]).status.code(), Some(2));
    assert_eq!(curvecast(&["simulate", "--preset", "study9", "--out", out]).status.code(), Some(2));
    assert_eq!(curvecast(&["simulate"]).status.code(), Some(2));
    assert_eq!(curvecast(&["frobnicate"]).status.code(), Some(2));
    assert!(!Path::new(out).exists());
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", "virtual_participants = 1\nrepetitions = 1\n");
    let out = dir.path().join("no/such/dir/t.csv");
    assert_eq!(curvecast(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(3));
}

fn small_run(dir: &Path) -> String {
    let cfg = write_config(dir, "small.toml", SMALL);
    let out = dir.join("t.csv");
    assert_eq!(curvecast(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    out.to_str().unwrap().to_string()
}

fn analyze(args: &[&str]) -> (Option<i32>, String) {
    let mut full = vec!["analyze"];
    full.extend_from_slice(args);
    let o = curvecast(&full);
    (o.status.code(), String::from_utf8(o.stdout).unwrap())
}

#[test]
fn analyze_reports() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_run(dir.path());

    let (code, text) = analyze(&["--in", &csv, "--report", "throughput"]);
    assert_eq!(code, Some(0));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "technique,throughput_bps,participants,cells");
    assert_eq!(lines.len(), 1 + 6);

    let (code, text) = analyze(&["--in", &csv, "--report", "fitts", "--group", "offset"]);
    assert_eq!(code, Some(0));
    assert_eq!(text.lines().count(), 1 + 2);
    assert!(text.starts_with("offset,intercept_s,slope_s_per_bit,r_squared,points\n"));

    let (code, text) = analyze(&["--in", &csv, "--report", "summary", "--group", "technique,distance"]);
    assert_eq!(code, Some(0));
    assert_eq!(text.lines().count(), 1 + 6 * 3);

    let (code, text) = analyze(&["--in", &csv, "--report", "plot", "--group", "technique,width"]);
    assert_eq!(code, Some(0));
    assert!(text.starts_with("series,width,mean_mt_s,ci95\n"));
    assert!(text.contains("technique=PBASIZE,0.1,"));

    let out = dir.path().join("r.csv");
    let (code, text) = analyze(&["--in", &csv, "--report", "summary", "--out", out.to_str().unwrap()]);
    assert_eq!(code, Some(0));
    assert!(text.is_empty());
    assert!(std::fs::read_to_string(out).unwrap().starts_with("mean_mt_s,"));
}

#[test]
fn analyze_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_run(dir.path());
    assert_eq!(analyze(&["--in", &csv, "--report", "anova"]).0, Some(2));
    assert_eq!(analyze(&["--in", &csv, "--report", "summary", "--group", "colour"]).0, Some(2));
    assert_eq!(analyze(&["--in", &csv, "--report", "plot"]).0, Some(2));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b,c\n1,2,3\n").unwrap();
    assert_eq!(analyze(&["--in", bad.to_str().unwrap(), "--report", "summary"]).0, Some(2));
    assert_eq!(analyze(&["--in", "/no/such.csv", "--report", "summary"]).0, Some(2));
}

#[test]
fn throughput_with_missing_cells_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    // A single repetition leaves every cell with one trial, too few for an SD.
    let cfg = write_config(dir.path(), "one.toml", "virtual_participants = 1\nrepetitions = 1\n[[positions]]\ndistance_multiple = 1.0\n");
    let out = dir.path().join("t.csv");
    assert_eq!(curvecast(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(analyze(&["--in", out.to_str().unwrap(), "--report", "throughput"]).0, Some(3));
}
