use std::fs;
use std::process::{Command, Output};

fn fomult(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fomult"));
    cmd.args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("FOMULT_") {
            cmd.env_remove(k);
        }
    }
    cmd.envs(envs.iter().copied());
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bounds_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bounds.csv");
    let o = fomult(&["bounds", "--format", "csv", "--out", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,lower,refined,upper");
    assert_eq!(lines.len(), 22);
    assert!(lines[21].starts_with("20,7.00000000000000,"), "{}", lines[21]);
    let upper: f64 = lines[21].split(',').nth(3).unwrap().parse().unwrap();
    let k = fomult::coeffs::k_of_q((3.0 - 5f64.sqrt()) / 2.0).unwrap();
    assert!((upper - k * 21.0 * 41.0).abs() < 1e-10);
}

#[test]
fn json_report_has_so3_rows() {
    let o = fomult(&["bounds", "--dmax", "2"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    let so3 = v["so3"].as_array().unwrap();
    assert!(so3.iter().any(|r| r["admissible"] == true && (r["q"].as_f64().unwrap() - 0.5176).abs() < 1e-4));
    assert!(so3.iter().any(|r| r["admissible"] == false));
}

#[test]
fn config_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# run\nn = 3\ndmax = lots\n").unwrap();
    let o = fomult(&["bounds", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("dmax"), "{err}");

    fs::write(&path, "shade = blue\n").unwrap();
    let o = fomult(&["bounds", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = fomult(&["bounds", "--delta", "3/2"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = fomult(&["bounds", "--n", "3", "--delta", "4"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn precedence_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "dmax = 5\nkmax = 4\n").unwrap();
    let cfg = path.to_str().unwrap();
    let rows = |o: &Output| stdout(o).lines().count() - 1;

    let o = fomult(&["bounds", "--format", "csv", "--config", cfg], &[]);
    assert_eq!(rows(&o), 6);
    let o = fomult(&["bounds", "--format", "csv", "--config", cfg], &[("FOMULT_DMAX", "2")]);
    assert_eq!(rows(&o), 3);
    let o = fomult(&["bounds", "--format", "csv", "--config", cfg, "--dmax", "1"], &[("FOMULT_DMAX", "2")]);
    assert_eq!(rows(&o), 2);
    let o = fomult(&["bounds", "--format", "csv"], &[("FOMULT_CONFIG", cfg)]);
    assert_eq!(rows(&o), 6);
}

#[test]
fn empty_suite_list_is_an_empty_passing_report() {
    let o = fomult(&["report", "--suites", ""], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["suites"].as_array().unwrap().is_empty());
    assert!(v["rows"].as_array().unwrap().is_empty());
}

#[test]
fn failing_suite_exits_one() {
    // The tensor oracle needs an integer N >= 3.
    let o = fomult(&["report", "--suites", "tensor", "--delta", "7/2"], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn dims_coeffs_and_net_tables() {
    let o = fomult(&["dims", "--dmax", "5", "--format", "csv"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().nth(6).unwrap().starts_with("5,144,"), "{text}");

    let o = fomult(&["coeffs", "--dmax", "2", "--kmax", "1", "--format", "csv"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("1,1,1,8/9,9/8,")), "{text}");

    let o = fomult(&["net", "--kmax", "3", "--format", "csv", "--t", "2"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "free_orthogonal,2.0,2,0.375"), "{text}");

    let o = fomult(&["net", "--kmax", "3"], &[]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let net = &v["nets"][0];
    assert!(net["cutoff_index"].as_u64().unwrap() > 0);
    assert_eq!(net["k0"]["stabilized"], true);
}
