//! End-to-end runs of the `bulksurf` binary: exit codes, stdout contract,
//! and the artifact files each subcommand leaves behind.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const TABLE_CONFIG: &str = r#"
[params]
d = 1.0
D = 1.5
mu = 1.0
nu = 1.0

[coeffs]
kappa = "1"
f_lin = "0.5"
g_lin = "0"

[shape]
a0 = 1.0

[mesh]
target_h = 0.11
"#;

/// Fresh scratch directory, unique per test.
fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bulksurf-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &PathBuf, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bulksurf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

/// Pulls the float out of a "key = value" stdout line.
fn parse_line(out: &str, key: &str) -> f64 {
    let line = out
        .lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("no `{key}` line in:\n{out}"));
    line.split('=').nth(1).unwrap().trim().parse().unwrap()
}

#[test]
fn speed_reports_the_table_speed() {
    let dir = workdir("speed");
    let config = write_config(&dir, TABLE_CONFIG);
    let out_dir = dir.join("out");

    let output = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "speed",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));

    let text = stdout(&output);
    let c_star = parse_line(&text, "c_star");
    let reference = 0.9923449724;
    assert!(
        ((c_star - reference) / reference).abs() <= 2e-3,
        "c_star = {c_star}"
    );
    assert!(text.contains("persistent"));

    assert!(out_dir.join("speed.csv").exists());
    let manifest_text = fs::read_to_string(out_dir.join("manifest.toml")).unwrap();
    let manifest = bulksurf::config::Manifest::parse(&manifest_text).unwrap();
    assert_eq!(manifest.command, "speed");
    assert_eq!(manifest.mesh.target_h, 0.11);
    assert_eq!(manifest.params.d_surf, 1.5);
    let shape = manifest.shape.expect("speed manifests record the shape");
    assert_eq!(shape.a0, 1.0);
}

#[test]
fn extinct_run_prints_extinct_and_exits_zero() {
    let dir = workdir("extinct");
    let config = write_config(
        &dir,
        &TABLE_CONFIG.replace("f_lin = \"0.5\"", "f_lin = \"-1\"").replace("g_lin = \"0\"", "g_lin = \"-1\""),
    );
    let out_dir = dir.join("out");

    let output = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "speed",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.lines().any(|l| l.trim() == "extinct"), "{text}");
    assert_eq!(parse_line(&text, "c_star"), 0.0);
}

#[test]
fn missing_section_is_a_config_error() {
    let dir = workdir("badcfg");
    // no [mesh] section
    let config = write_config(
        &dir,
        r#"
[params]
d = 1.0
D = 1.5
mu = 1.0
nu = 1.0

[coeffs]
kappa = "1"
f_lin = "0.5"
g_lin = "0"
"#,
    );
    let output = run(&["--config", config.to_str().unwrap(), "speed"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("config error"));
}

#[test]
fn mesh_dump_counts_vertices() {
    let dir = workdir("mesh");
    let config = write_config(&dir, TABLE_CONFIG);
    let out_dir = dir.join("out");

    let output = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "mesh",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    let n: usize = text
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| panic!("unexpected mesh output: {text}"));
    assert!((850..=1100).contains(&n), "vertex count {n}");

    let dump = fs::read_to_string(out_dir.join("mesh.txt")).unwrap();
    let mut lines = dump.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, format!("vertices {n}"));
    // every vertex line parses as two floats
    let first = lines.next().unwrap();
    let coords: Vec<f64> = first.split(' ').map(|s| s.parse().unwrap()).collect();
    assert_eq!(coords.len(), 2);
}

#[test]
fn sweep_is_deterministic() {
    let dir = workdir("sweep");
    let config = write_config(
        &dir,
        &format!(
            "{TABLE_CONFIG}\n[sweep]\nvar = \"radius\"\nvalues = [0.5, 1.0, 2.0]\n"
        ),
    );

    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let out_dir = dir.join(tag);
        let output = run(&[
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "sweep",
        ]);
        assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
        assert!(stdout(&output).contains("3 points"));
        outputs.push(fs::read(out_dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "sweep output varies between runs");
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("param,c_star,alpha_star"));
}

#[test]
fn optimize_writes_history_and_shapes() {
    let dir = workdir("optimize");
    let config = write_config(
        &dir,
        r#"
[params]
d = 1.0
D = 3.0
mu = 1.0
nu = 1.0

[coeffs]
kappa = "1"
f_lin = "0.5"
g_lin = "0"

[shape]
a0 = 1.0

[mesh]
target_h = 0.12

[optimize]
direction = "maximize"
modes = 0
dt0 = 0.5
max_iters = 4
"#,
    );
    let out_dir = dir.join("out");

    let output = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "optimize",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let text = stdout(&output);
    assert!(text.contains("status="), "{text}");
    assert!(text.contains("c_star="), "{text}");

    let history = fs::read_to_string(out_dir.join("history.csv")).unwrap();
    assert!(history.starts_with("iter,c_star,alpha_star,dt,area,perimeter,accepted"));
    assert!(out_dir.join("iter_0000.shape").exists());

    let manifest_text = fs::read_to_string(out_dir.join("manifest.toml")).unwrap();
    let manifest = bulksurf::config::Manifest::parse(&manifest_text).unwrap();
    let optimize = manifest.optimize.expect("optimize runs record settings");
    assert_eq!(optimize.direction, "maximize");
    assert_eq!(optimize.max_iters, 4);
}

#[test]
fn validate_passes() {
    let dir = workdir("validate");
    let config = write_config(&dir, TABLE_CONFIG);
    let out_dir = dir.join("out");

    let output = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "validate",
    ]);
    let text = stdout(&output);
    assert_eq!(output.status.code(), Some(0), "{text}");
    assert!(text.contains("PASS"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");

    let csv = fs::read_to_string(out_dir.join("validate.csv")).unwrap();
    assert!(csv.starts_with("case,config,oracle,fem,rel_error,tolerance,pass"));
}
