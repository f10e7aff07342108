use std::path::PathBuf;
use std::process::{Command, Output};

fn specamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specamp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("specamp-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn predict_prints_a_table() {
    let o = specamp(&["predict", "--delta-grid", "0.4:2:0.8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("delta,delta_u,lambda_star,lambda_bar,a2"), "{header}");
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    assert_eq!(rows.len(), 3);
    // Below the threshold (0.5) the overlap is zero; above it, positive.
    assert_eq!(rows[0][4].parse::<f64>().unwrap(), 0.0);
    assert!(rows[1][4].parse::<f64>().unwrap() > 0.0);
    assert!((rows[0][1].parse::<f64>().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn predict_complex_matches_known_value() {
    let o = specamp(&["predict", "--complex", "--delta", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').take(5).map(|v| v.parse().unwrap()).collect();
    assert!((row[4] - 0.30126076).abs() < 1e-4, "{text}");
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--d", "150", "--delta", "2.5", "--trials", "2", "--seed", "3"];
    let a = specamp(&args);
    let b = specamp(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("delta,spectral_mc_mean"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn simulate_reads_a_config_file_and_flags_override_it() {
    let dir = scratch("cfg");
    let cfg = dir.join("run.cfg");
    let out = dir.join("rows.csv");
    std::fs::write(&cfg, "preset = fig1-gaussian\nd = 150\ndelta-grid = 2:3:0.5\ntrials = 1\n").unwrap();
    let o = specamp(&["simulate", "--config", cfg.to_str().unwrap(), "--delta", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2, "--delta replaces the grid: {text}");
    assert!(text.lines().nth(1).unwrap().starts_with("2,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn se_reports_fixed_points() {
    let o = specamp(&["se", "--delta-grid", "1:2:1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[2], 1.0, "Gaussian prior with identity reaches perfect recovery at delta 2: {text}");
}

#[test]
fn bad_arguments_exit_nonzero() {
    assert!(!specamp(&["simulate", "--trials", "0"]).status.success());
    assert!(!specamp(&["simulate", "--prior", "laplace"]).status.success());
    assert!(!specamp(&["simulate", "--delta-grid", "3:1:0.5"]).status.success());
    assert!(!specamp(&["predict", "--delta", "1", "--delta-grid", "1:2:0.5"]).status.success());
    let o = specamp(&["simulate", "--preset", "cdp"]);
    assert_eq!(o.status.code(), Some(2), "cdp without an image is a hard error");
    let o = specamp(&["simulate", "--d", "100", "--delta", "2", "--trials", "1", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/dir/x.csv"));
}

#[test]
fn cdp_writes_a_reconstruction() {
    let dir = scratch("cdp");
    let out = dir.join("rec.ppm");
    let image = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/astronaut64.ppm");
    let o = specamp(&["cdp", "--image", image, "--delta", "2.4", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(&out).unwrap();
    assert!(bytes.starts_with(b"P6"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn selftest_passes() {
    let o = specamp(&["selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
}
