use grfopt::harness::config::ExperimentConfig;
use grfopt::harness::experiments::{
    run_halting, run_simulate, run_two_init_with, run_verify, ConvergenceReport,
};
use grfopt::harness::output::{
    read_report, read_verify_samples, write_report, write_simulate, write_verify_samples,
};

fn config(extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        r#"
[kernel]
type = "stationary_schoenberg"
atoms = [[1.0, 1.0]]

[algorithm]
type = "gd"
alpha = 0.4

[experiment]
master_seed = 17
{extra}
"#
    ))
    .unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12 * (1.0 + a.abs())
}

#[test]
fn smoke_run_with_two_replications_and_one_step() {
    let cfg = config("N_list = [32]\nsteps = 1\nreplications = 2");
    let records = run_simulate(&cfg).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].0, 0);
    assert_eq!(records[1].0, 1);
    assert!(records.iter().all(|(_, r)| r.steps() == 1 && r.dimension == 32));
    let mut out = Vec::new();
    write_simulate(&records, &[0.5], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "replication,N,step,f_value,grad_norm_sq,halted_0.5");
    assert_eq!(text.lines().count(), 1 + 2 * 2);
}

#[test]
fn report_survives_a_csv_round_trip() {
    let cfg = config("N_list = [16, 64]\nsteps = 3\nreplications = 20");
    let v = run_verify(&cfg).unwrap();
    let mut buf = Vec::new();
    write_report(&v.report, &mut buf).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("# gap_f"));
    let back = read_report(buf.as_slice()).unwrap();
    assert_eq!(back.rows.len(), v.report.rows.len());
    for (a, b) in v.report.rows.iter().zip(&back.rows) {
        assert_eq!((a.n, a.step, a.count), (b.n, b.step, b.count));
        for (x, y) in [
            (a.mean_f, b.mean_f),
            (a.sd_f, b.sd_f),
            (a.se_f, b.se_f),
            (a.gap_f, b.gap_f),
            (a.tol_f, b.tol_f),
            (a.mean_grad, b.mean_grad),
            (a.gap_grad, b.gap_grad),
            (a.slope_f, b.slope_f),
            (a.slope_grad, b.slope_grad),
        ] {
            assert!(close(x, y), "{x} vs {y}");
        }
    }

    let mut buf = Vec::new();
    write_verify_samples(&v.samples, &mut buf).unwrap();
    let samples = read_verify_samples(buf.as_slice()).unwrap();
    assert_eq!(samples, v.samples);
    let rebuilt = ConvergenceReport::from_samples(&samples);
    for (a, b) in v.report.rows.iter().zip(&rebuilt.rows) {
        assert!(close(a.mean_f, b.mean_f) && close(a.sd_grad, b.sd_grad));
    }
}

#[test]
fn simulation_output_is_deterministic() {
    let cfg = config("N_list = [16, 64]\nsteps = 4\nreplications = 10\nepsilon = [0.3]");
    let bytes = || {
        let mut out = Vec::new();
        write_simulate(&run_simulate(&cfg).unwrap(), &cfg.epsilon, &mut out).unwrap();
        out
    };
    assert_eq!(bytes(), bytes());
}

#[test]
fn identical_streams_give_zero_gaps() {
    let cfg = config("N_list = [16, 64]\nsteps = 4\nreplications = 5");
    let r = run_two_init_with(&cfg, true).unwrap();
    assert!(r.rows.iter().all(|row| row.median_max_gap == 0.0 && row.pairs == 5));
    let r = run_two_init_with(&cfg, false).unwrap();
    assert!(r.rows.iter().all(|row| row.median_max_gap > 0.0));
}

#[test]
fn halting_requires_thresholds() {
    let cfg = config("N_list = [16]\nsteps = 2\nreplications = 4");
    assert!(run_halting(&cfg).is_err());
    let cfg = config("N_list = [16, 64]\nsteps = 4\nreplications = 8\nepsilon = [0.6]");
    let r = run_halting(&cfg).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert!(r.rows.iter().all(|row| row.tau == Some(2) && row.replications == 8));
}

#[test]
fn unknown_keys_are_rejected() {
    let text = "[kernel]\ntype = \"stationary_schoenberg\"\natoms = [[1.0, 1.0]]\n\
                [algorithm]\ntype = \"gd\"\nalpha = 0.4\nbeta2 = 1.0\n[experiment]\n";
    let e = ExperimentConfig::from_toml_str(text).unwrap_err();
    assert_eq!(e.kind(), "config");
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 3);
}
