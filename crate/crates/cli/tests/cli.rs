//! End-to-end tests of the command-line interface: exit codes, output
//! formats, and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_holonomy"))
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("holonomy-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout(output: &Output) -> &str {
    std::str::from_utf8(&output.stdout).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("missing field {key} in:\n{text}"))
}

const DISC_CIRCLE: &str = "\
[system]
kind = \"disc\"
inertia = 1.0
mass = 1.0

[path]
kind = \"disc-circle\"
r0 = 1.0
";

#[test]
fn holonomy_disc_circle_reports_analytic_comparison() {
    let cfg = write_config("disc-circle.toml", DISC_CIRCLE);
    let out = bin().args(["holonomy", "-c"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let angle: f64 = field(text, "log0").parse().unwrap();
    assert!((angle + std::f64::consts::PI).abs() < 1e-6);
    let residual: f64 = field(text, "analytic.residual").parse().unwrap();
    assert!(residual < 1e-6);
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let cfg = write_config("determinism.toml", DISC_CIRCLE);
    let a = bin().args(["verify", "-c"]).arg(&cfg).output().unwrap();
    let b = bin().args(["verify", "-c"]).arg(&cfg).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_passes_on_builtin_disc() {
    let cfg = write_config("verify-disc.toml", DISC_CIRCLE);
    let out = bin().args(["verify", "-c"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    assert_eq!(field(stdout(&out), "result"), "pass");
}

#[test]
fn impossible_tolerance_flag_fails_verification_with_exit_1() {
    let cfg = write_config("verify-tight.toml", DISC_CIRCLE);
    let out = bin()
        .args(["verify", "--tol", "1e-18", "-c"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(field(stdout(&out), "result"), "fail");
}

#[test]
fn missing_field_is_a_config_error_with_exit_2() {
    let cfg = write_config("broken.toml", "[system]\nkind = \"board\"\nm1 = 1.0\n");
    let out = bin().args(["verify", "-c"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = std::str::from_utf8(&out.stderr).unwrap();
    assert!(err.contains("m2"), "stderr was: {err}");
}

#[test]
fn open_path_is_refused_for_holonomy() {
    let cfg = write_config(
        "open.toml",
        "[system]\nkind = \"disc\"\ninertia = 1.0\nmass = 1.0\n\
         [path]\nkind = \"disc-circle\"\nr0 = 1.0\nturns = 0.5\n",
    );
    let out = bin().args(["holonomy", "-c"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = std::str::from_utf8(&out.stderr).unwrap();
    assert!(err.contains("not closed"), "stderr was: {err}");
}

#[test]
fn collinear_gait_aborts_with_exit_3() {
    let cfg = write_config(
        "collinear.toml",
        "[system]\nkind = \"nbody\"\nmasses = [1.0, 1.0, 1.0]\nparts = \"rotations\"\n\
         [path]\nkind = \"cat\"\namplitude = 0.0\nbase_angles = [0.0, 0.0]\n",
    );
    let out = bin().args(["holonomy", "-c"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = std::str::from_utf8(&out.stderr).unwrap();
    assert!(err.contains("singular"), "stderr was: {err}");
}

#[test]
fn board_sine_lift_returns_to_start() {
    let cfg = write_config(
        "board-lift.toml",
        "[system]\nkind = \"board\"\nm1 = 3.0\nm2 = 1.0\n\
         [path]\nkind = \"board-sine\"\nx0 = 0.3\namplitude = 0.5\n\
         [integrator]\nsteps = 512\n",
    );
    let out = bin().args(["lift", "-c"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').next(), Some("t"));
    let last = lines.last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    // Closed relative loop on an abelian group: zero net board drift.
    assert!((cols[1] - 0.3).abs() < 1e-9, "final x was {}", cols[1]);
    // Pairing residual column stays at finite-difference noise level.
    assert!(cols[cols.len() - 1] < 1e-6);
}

#[test]
fn curvature_scan_matches_disc_closed_form() {
    let cfg = write_config(
        "curvature.toml",
        "[system]\nkind = \"disc\"\ninertia = 1.0\nmass = 1.0\n\
         [curvature]\nplane = [0, 1]\naxis = 0\nrange = [1.0, 2.0]\ncount = 2\n\
         base = [1.0, 0.0, 0.0]\n",
    );
    let out = bin().args(["curvature", "-c"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let first = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = first.split(',').collect();
    let value: f64 = cols[5].parse().unwrap();
    // 2 m r I / (I + m r^2)^2 at r = 1 is 1/2.
    assert!((value - 0.5).abs() < 1e-6, "value was {value}");
}

#[test]
fn describe_prints_metric_and_connection() {
    let cfg = write_config(
        "describe.toml",
        "[system]\nkind = \"board\"\nm1 = 3.0\nm2 = 1.0\n\
         [describe]\npoint = [0.0, 0.0]\n",
    );
    let out = bin().args(["describe", "-c"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let g00: f64 = field(text, "metric.g00").parse().unwrap();
    assert_eq!(g00, 4.0);
    let a1: f64 = field(text, "connection.a01").parse().unwrap();
    assert!((a1 - 0.25).abs() < 1e-12);
}

#[test]
fn sampled_csv_path_is_lifted() {
    let dir = std::env::temp_dir().join("holonomy-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("board-path.csv");
    let rows: String = (0..=64)
        .map(|i| {
            let t = i as f64 / 64.0;
            format!("0.0,{}\n", 0.4 * (2.0 * std::f64::consts::PI * t).sin())
        })
        .collect();
    std::fs::write(&csv, rows).unwrap();
    let cfg = write_config(
        "csv-path.toml",
        &format!(
            "[system]\nkind = \"board\"\nm1 = 1.0\nm2 = 1.0\n\
             [path]\nkind = \"csv\"\nfile = \"{}\"\n\
             [integrator]\nsteps = 256\n",
            csv.display()
        ),
    );
    let out = bin().args(["lift", "-c"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().count() > 250);
}

#[test]
fn output_file_flag_writes_instead_of_stdout() {
    let cfg = write_config("outfile.toml", DISC_CIRCLE);
    let dest = std::env::temp_dir().join("holonomy-cli-tests/hol.record");
    let _ = std::fs::remove_file(&dest);
    let out = bin()
        .args(["holonomy", "-c"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dest)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&dest).unwrap();
    assert!(written.contains("analytic.beta"));
}

#[test]
fn generic_system_from_tables_verifies() {
    let cfg = write_config(
        "generic.toml",
        "[system]\nkind = \"generic\"\nn = 3\nk = 1\n\
         metric = [[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 1.5]]\n\
         generators = [[1.0], [0.0], [0.0]]\n\
         potential = [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]\n\
         [run]\npoints = 50\n",
    );
    let out = bin().args(["verify", "-c"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(field(stdout(&out), "result"), "pass");
}
