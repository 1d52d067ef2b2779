use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SE_GD: &str = r#"
[kernel]
type = "stationary_schoenberg"
atoms = [[1.0, 1.0]]

[algorithm]
type = "gd"
alpha = 0.4

[experiment]
N_list = [16, 64]
steps = 3
replications = 6
epsilon = [0.5]
master_seed = 3
"#;

fn run(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_grfopt"));
    cmd.args(args);
    if let Some(w) = workers {
        cmd.env("GRF_WORKERS", w);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr_line(o: &Output) -> String {
    let s = String::from_utf8_lossy(&o.stderr).to_string();
    assert_eq!(s.lines().count(), 1, "{s}");
    s
}

#[test]
fn predict_writes_the_curve_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SE_GD);
    let o = run(&["predict", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("step,f_limit,grad_norm_sq_limit,sigma_w,dim"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn missing_config_is_a_config_error() {
    let o = run(&["predict"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_line(&o).starts_with("error kind=config class=config message="));

    let o = run(&["predict", "--config", "/nonexistent/grf.toml"], None);
    assert_eq!(o.status.code(), Some(2));
    stderr_line(&o);
}

#[test]
fn bad_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write_config(dir.path(), "typo.toml", &SE_GD.replace("alpha = 0.4", "alpha = 0.4\nalfa = 1.0"));
    let o = run(&["predict", "--config", typo.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    stderr_line(&o);

    let mode = write_config(dir.path(), "mode.toml", &SE_GD.replace("[experiment]", "[experiment]\nmode = \"simulate\""));
    let o = run(&["predict", "--config", mode.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(run(&["simulate", "--config", mode.to_str().unwrap()], None).status.success());

    let o = run(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(2));
    stderr_line(&o);
}

#[test]
fn rank_stall_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = SE_GD.replace(
        "type = \"stationary_schoenberg\"\natoms = [[1.0, 1.0]]",
        "type = \"quadratic\"\nsigma_A = 1.0\nsigma_eta = 0.0\nR = 1.0",
    );
    let cfg = write_config(dir.path(), "q.toml", &text);
    let o = run(&["predict", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_line(&o).contains("class=numerical"));

    let frozen = write_config(dir.path(), "qf.toml", &format!("{text}\n[numerics]\nconditioning = \"pseudo_inverse\"\nfreeze_dimension = true\n"));
    assert!(run(&["predict", "--config", frozen.to_str().unwrap()], None).status.success());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SE_GD);
    let out = dir.path().join("missing").join("x.csv");
    let o = run(&["predict", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_line(&o).contains("class=io"));
}

#[test]
fn simulate_is_identical_across_worker_counts_and_seeds_matter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SE_GD);
    let cfg = cfg.to_str().unwrap();
    let one = run(&["simulate", "--config", cfg], Some("1"));
    let four = run(&["simulate", "--config", cfg], Some("4"));
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let other = run(&["simulate", "--config", cfg, "--seed", "4"], Some("4"));
    assert_ne!(one.stdout, other.stdout);
    let bad = run(&["simulate", "--config", cfg], Some("many"));
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_writes_samples_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SE_GD);
    let out = dir.path().join("v.csv");
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.exists());
    let report = std::fs::read_to_string(dir.path().join("v.report.csv")).unwrap();
    assert!(report.starts_with('#'));
}

#[test]
fn barrier_and_kernel_check() {
    let dir = tempfile::tempdir().unwrap();
    let sg = SE_GD.replace("type = \"stationary_schoenberg\"\natoms = [[1.0, 1.0]]", "type = \"spin_glass\"\ncoeffs = [0.0, 0.0, 1.0]");
    let cfg = write_config(dir.path(), "sg.toml", &sg);
    let o = run(&["barrier", "--config", cfg.to_str().unwrap()], None);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "1.414214");

    let o = run(&["check-kernel", "--config", cfg.to_str().unwrap()], None);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().last(), Some("PASS"));

    let se = write_config(dir.path(), "se.toml", SE_GD);
    let o = run(&["barrier", "--config", se.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let o = run(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("predict"));
}
