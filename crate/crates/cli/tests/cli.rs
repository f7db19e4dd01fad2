//! End-to-end runs of the `wgscat` binary on coarse meshes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const COARSE: [&str; 4] = ["--h", "0.125", "--tol", "1e-3"];

fn wgscat(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgscat"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("WGSCAT_OUT")
        .output()
        .expect("spawn wgscat")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = wgscat(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed with {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn accepted(report: &Value, target: &str) -> Vec<f64> {
    report["targets"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["target"] == target)
        .unwrap_or_else(|| panic!("no {target} in {report}"))["peaks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect()
}

fn with(extra: &[&'static str]) -> Vec<&'static str> {
    extra.iter().chain(COARSE.iter()).copied().collect()
}

#[test]
fn invisibility_sweep_finds_the_first_point() {
    let dir = TempDir::new().unwrap();
    ok(&with(&["sweep-invisibility", "--range", "2.45,2.7", "--step", "0.05"]), dir.path());
    let out = dir.path().join("invisibility");
    for f in ["sweep.csv", "peaks.json", "T_curve.svg", "neg_ln_T.svg"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("L,T_re,T_im,R_re,R_im,energy_residual,"));
    assert_eq!(csv.lines().count(), 1 + 6);
    let report = json(out.join("peaks.json"));
    assert_eq!(report["command"], "sweep-invisibility");
    assert_eq!(report["config"]["range"], serde_json::json!([2.45, 2.7]));
    let peaks = accepted(&report, "T_eq_1");
    assert_eq!(peaks.len(), 1, "{report}");
    assert!((peaks[0] - 2.5756).abs() <= 0.02, "{peaks:?}");
    let svg = fs::read_to_string(out.join("T_curve.svg")).unwrap();
    assert!(svg.contains("|z - 1/2| = 1/2") && svg.contains("<polyline"));
}

#[test]
fn staircase_invisibility_point() {
    let dir = TempDir::new().unwrap();
    ok(
        &with(&["sweep-invisibility", "--geometry", "staircase", "--range", "4.45,4.7", "--step", "0.05"]),
        dir.path(),
    );
    let report = json(dir.path().join("invisibility/peaks.json"));
    assert_eq!(report["config"]["heights"], serde_json::json!([2.5, 2.0, 1.5, 1.0]));
    let peaks = accepted(&report, "T_eq_1");
    assert!(peaks.iter().any(|l| (l - 4.5808).abs() <= 0.03), "{peaks:?}");
}

#[test]
fn trapped_sweep_exports_the_mode() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&with(&["sweep-trapped", "--range", "2.45,2.65", "--step", "0.05"]), dir.path());
    let out = dir.path().join("trapped");
    let report = json(out.join("peaks.json"));
    let peaks = accepted(&report, "s22_eq_minus1");
    assert_eq!(peaks.len(), 1, "{stdout}");
    assert!((peaks[0] - 2.5524).abs() <= 0.02);
    let mode = &report["trapped_modes"][0];
    assert!(mode["tail_decay_rate"].as_f64().unwrap() > 0.0);
    for f in ["half.csv", "unfolded.csv", "unfolded_re.svg", "unfolded_im.svg"] {
        assert!(out.join("mode_0").join(f).is_file(), "missing {f}");
    }
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("L,s11_re,s11_im,s12_re,s12_im,s21_re,s21_im,s22_re,s22_im,"));
    // s11 stays at 1.
    for line in csv.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').take(3).map(|c| c.parse().unwrap()).collect();
        assert!((cells[1] - 1.0).abs() < 1e-3 && cells[2].abs() < 1e-3, "{line}");
    }
    assert!(fs::read_to_string(out.join("s_ij.svg")).unwrap().contains("s11(L)"));
}

#[test]
fn limit_matrices_report_identities() {
    let dir = TempDir::new().unwrap();
    ok(&["limit-matrices", "--h", "0.0625"], dir.path());
    let report = json(dir.path().join("limits/limits.json"));
    let id = &report["identities"];
    assert!(id["mixed_unitarity"].as_f64().unwrap() < 1e-3);
    assert!(id["mixed_s12"].as_f64().unwrap() > 0.1);
    for circle in ["circle_2", "circle_4"] {
        let r = id[circle]["radius"].as_f64().unwrap();
        assert!((r - 1.0).abs() < 1e-3, "{circle}: {r}");
    }
    assert!(id["relations"].as_array().unwrap().iter().all(|r| r.as_f64().unwrap() < 1e-3));
    assert!(report["margin_doubling"]["mixed_max_change"].as_f64().unwrap() < 1e-3);
}

#[test]
fn invisibility_field_is_real_up_to_the_incident_wave() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&["solve-field", "--L", "2.5756"], dir.path());
    assert!(stdout.contains("sup|Re(v - w)|"));
    let out = dir.path().join("field");
    let report = json(out.join("field.json"));
    let ratio = report["sup_re_scattered"].as_f64().unwrap() / report["sup_v"].as_f64().unwrap();
    assert!(ratio < 1e-2, "{ratio}");
    assert!(fs::read_to_string(out.join("field.csv")).unwrap().starts_with("x,y,re,im\n"));
    for f in ["field_re.svg", "field_im.svg", "field_im_scattered.svg"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn asymptotic_compare_reports_rates() {
    let dir = TempDir::new().unwrap();
    ok(&with(&["asymptotic-compare", "--range", "3,4.5", "--step", "0.25"]), dir.path());
    let out = dir.path().join("asymptotics");
    let report = json(out.join("report.json"));
    assert!((report["gamma"].as_f64().unwrap() - 0.8 * std::f64::consts::PI * 3f64.sqrt() / 2.0).abs() < 1e-12);
    assert!(report["rh"]["fitted_rate"].is_number() && report["s22"]["fitted_rate"].is_number());
    assert!(report["s22"]["relative_deviation"].is_null());
    let csv = fs::read_to_string(out.join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7);
    for f in ["rh_curves.svg", "rh_log_error.svg", "s22_curves.svg", "s22_log_error.svg"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let args = with(&["sweep-trapped", "--range", "2.45,2.65", "--step", "0.05", "--no-quality-gate"]);
    let read_all = |root: &Path| {
        let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    files.push((p.clone(), fs::read(p).unwrap()));
                }
            }
        }
        files.sort();
        files
    };
    ok(&args, dir.path());
    let first = read_all(dir.path());
    ok(&args, dir.path());
    let second = read_all(dir.path());
    assert!(first.len() > 5);
    assert_eq!(first.len(), second.len());
    for ((p, a), (_, b)) in first.iter().zip(&second) {
        assert!(a == b, "{} differs between runs", p.display());
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"range": [2.45, 2.7], "step": 0.1, "h": 0.125, "tol": 1e-3, "quality_gate": false}"#).unwrap();
    ok(&["sweep-invisibility", "--config", cfg.to_str().unwrap(), "--step", "0.05"], dir.path());
    let report = json(dir.path().join("invisibility/peaks.json"));
    assert_eq!(report["config"]["step"], 0.05);
    assert_eq!(report["config"]["h"], 0.125);
    assert_eq!(report["config"]["quality_gate"], false);
}

#[test]
fn output_directory_defaults_to_the_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_wgscat"))
        .args(["limit-matrices", "--h", "0.25"])
        .env("WGSCAT_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("limits/limits.json").is_file());
}

#[test]
fn validation_errors_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    let cases: [(&[&str], &str); 6] = [
        (&["sweep-invisibility", "--range", "3,3"], "empty sweep range"),
        (&["sweep-invisibility", "--range", "5,3"], "empty sweep range"),
        (&["sweep-trapped", "--k", "4"], "k = 4"),
        (&["solve-field"], "--L"),
        (&["solve-field", "--L", "0.5"], "L = 0.5"),
        (&["asymptotic-compare", "--range", "3,3.5", "--step", "0.25"], "at least 6"),
    ];
    for (args, needle) in cases {
        let o = wgscat(args, dir.path());
        let stderr = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {stderr}");
        assert!(stderr.contains(needle), "{args:?}: {stderr}");
    }
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none(), "nothing is written on validation failure");
}

#[test]
fn malformed_config_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"stepp": 0.1}"#).unwrap();
    let o = wgscat(&["sweep-invisibility", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
}
