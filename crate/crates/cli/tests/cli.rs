use std::fs;
use std::path::Path;
use std::process::{Command as Process, Output};

use serde_json::Value;
use twistres::cross_section::{analytic_rectangle_modes, coupling_table};
use twistres::kernels1d::Grid1D;
use twistres::threshold_asymptotics::compute_mu;
use twistres::twist_profile::TwistProfile;
use twistres_cli::{load_config, CliError, Format, ModeMethod, RunConfig, SCHEMA_VERSION};

const SQUARE: &str = r#"{
  "domain": {"shape": {"kind": "rectangle", "width": 1.0, "height": 1.0}},
  "profile": {"family": "gaussian", "amplitude": 1.0, "width": 1.0}
}"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn twistres(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_twistres")).args(args).output().unwrap()
}

fn run_cmd(cmd: &str, config: &Path, out: &Path, format: &str) -> Output {
    twistres(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", format])
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn minimal_config_gets_defaults() {
    let cfg = RunConfig::from_json(SQUARE).unwrap();
    assert_eq!(cfg.solver.half_length, 15.0);
    assert_eq!(cfg.solver.step, 1.0 / 32.0);
    assert_eq!(cfg.modes.count, 60);
    assert_eq!(cfg.modes.method, ModeMethod::Analytic);
    assert_eq!(cfg.threshold, 0);
    assert_eq!(cfg.deltas, vec![0.02, 0.04, 0.08]);
    assert_eq!(cfg.delta, Some(0.02));
    assert_eq!(cfg.output.format, Format::Both);
}

#[test]
fn polygon_defaults_to_finite_differences() {
    let text = r#"{"domain": {"shape": {"kind": "polygon", "vertices": [[0,0],[1,0],[1,1],[0,1]]}},
        "profile": {"family": "gaussian", "amplitude": 1.0, "width": 1.0}}"#;
    let cfg = RunConfig::from_json(text).unwrap();
    assert_eq!(cfg.modes.method, ModeMethod::FiniteDifference);
    assert_eq!(cfg.modes.grid_step, Some(1.0 / 40.0));
}

#[test]
fn config_round_trip_is_stable() {
    let text = r#"{
      "domain": {"shape": {"kind": "disc", "radius": 1.0}},
      "profile": {"family": "modulated_gaussian", "amplitude": 0.7, "width": 1.2, "frequency": 1.5, "offset": 0.3},
      "solver": {"radius": 1.0, "half_length": 18.0},
      "modes": {"count": 12},
      "threshold": 1,
      "deltas": [0.01, 0.03]
    }"#;
    let first = RunConfig::from_json(text).unwrap();
    let second = RunConfig::from_json(&first.to_json()).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.to_json(), second.to_json());
}

#[test]
fn duplicate_and_unknown_fields_are_rejected() {
    let dup = r#"{"domain": {"shape": {"kind": "disc", "radius": 1.0}},
        "profile": {"family": "gaussian", "amplitude": 1.0, "width": 1.0},
        "threshold": 0, "threshold": 1}"#;
    match RunConfig::from_json(dup) {
        Err(CliError::Parse { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("duplicate field `threshold`"), "{message}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
    let unknown = SQUARE.replace("\"width\": 1.0}\n}", "\"width\": 1.0}, \"tolerance\": 1}");
    let err = RunConfig::from_json(&unknown).unwrap_err();
    assert!(err.to_string().contains("unknown field `tolerance`"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn coupling_list_must_be_positive_and_ascending() {
    for deltas in ["[0.04, 0.02]", "[0.02, 0.02]", "[-0.1, 0.1]", "[]"] {
        let text = SQUARE.replace("\n}", &format!(", \"deltas\": {deltas}\n}}"));
        let err = RunConfig::from_json(&text).unwrap_err();
        assert!(matches!(err, CliError::Invalid(_)), "{deltas}: {err}");
    }
}

#[test]
fn missing_file_is_a_config_error() {
    let err = load_config(Path::new("/nonexistent/run.json")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn weight_exponent_above_half_decay_rate_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = SQUARE.replace("\n}", ", \"solver\": {\"weight_exponent\": 30.0, \"decay_rate\": 50.0}\n}");
    let cfg = write(dir.path(), "run.json", &text);
    let out = run_cmd("mu", &cfg, &dir.path().join("out"), "json");
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("N = 30") && stderr.contains("α/2"), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn mu_command_reports_the_computed_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", SQUARE);
    let out = run_cmd("mu", &cfg, dir.path(), "both");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&dir.path().join("mu.json"));
    assert_eq!(json["schema_version"], SCHEMA_VERSION);
    assert_eq!(json["command"], "mu");
    assert_eq!(json["config"]["solver"]["half_length"], 15.0);
    assert!(json["solver"]["weight_exponent"].as_f64().unwrap() > 0.0);

    let modes = analytic_rectangle_modes(1.0, 1.0, 60).unwrap();
    let table = coupling_table(&modes, 0).unwrap();
    let grid = Grid1D::new(15.0, 1.0 / 32.0).unwrap();
    let want = compute_mu(&modes, &table, &TwistProfile::gaussian(1.0, 1.0).unwrap(), &grid).unwrap();
    let r = &json["result"];
    assert_eq!(r["mu"].as_f64().unwrap(), want.mu);
    assert_eq!(r["tail_bound"].as_f64().unwrap(), want.tail_bound);
    assert_eq!(r["Q"].as_u64().unwrap() as usize, modes.len());
    assert!(dir.path().join("mu.csv").exists());
}

#[test]
fn mu_needs_the_ground_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", &SQUARE.replace("\n}", ", \"threshold\": 1\n}"));
    assert_eq!(run_cmd("mu", &cfg, dir.path(), "json").status.code(), Some(2));
}

#[test]
fn modes_command_writes_the_cluster_table() {
    let dir = tempfile::tempdir().unwrap();
    let text = SQUARE.replace("\n}", ", \"modes\": {\"count\": 6}\n}");
    let cfg = write(dir.path(), "run.json", &text);
    let out = run_cmd("modes", &cfg, dir.path(), "both");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("modes.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "index,eigenvalue,cluster");
    assert_eq!(lines.len(), 1 + 6);
    assert!(lines[2].ends_with(",1") && lines[3].ends_with(",1"));
    let json = read_json(&dir.path().join("modes.json"));
    assert_eq!(json["result"]["clusters"][1]["multiplicity"], 2);
    assert!(json["solver"].is_null());
}

#[test]
fn sweep_writes_one_row_per_coupling_and_a_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", SQUARE);
    let out = run_cmd("sweep", &cfg, dir.path(), "both");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "delta,re_k,im_k,residual,predicted_re,predicted_im,winding");
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 7);
        assert!(cols[2].parse::<f64>().unwrap() < 0.0);
        assert_eq!(cols[6], "1");
    }
    let json = read_json(&dir.path().join("sweep.json"));
    let fits = json["result"]["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 1);
    assert!(fits[0]["c2_relative_error"].as_f64().unwrap() < 1e-2);
    assert_eq!(json["result"]["points"].as_array().unwrap().len(), 3);
}

#[test]
fn identical_runs_give_identical_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", &SQUARE.replace("\n}", ", \"delta\": 0.05\n}"));
    let path = dir.path().join("resonances.json");
    assert!(run_cmd("resonances", &cfg, dir.path(), "json").status.success());
    let first = fs::read(&path).unwrap();
    assert!(run_cmd("resonances", &cfg, dir.path(), "json").status.success());
    assert_eq!(first, fs::read(&path).unwrap());
    assert!(!dir.path().join("resonances.csv").exists());
}

#[test]
fn uncertified_coupling_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", &SQUARE.replace("\n}", ", \"delta\": 5.0\n}"));
    let out = run_cmd("resonances", &cfg, dir.path(), "csv");
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn upsilon_and_validate_succeed_on_a_degenerate_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let text = SQUARE.replace("\n}", ", \"threshold\": 1, \"modes\": {\"count\": 30}\n}");
    let cfg = write(dir.path(), "run.json", &text);
    let out = run_cmd("upsilon", &cfg, dir.path(), "both");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&dir.path().join("upsilon.json"));
    let ev = json["result"]["eigenvalues"].as_array().unwrap();
    assert_eq!(ev.len(), 2);
    let (a, b) = (ev[0][0].as_f64().unwrap(), ev[1][0].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} {b}");
    let out = run_cmd("validate", &cfg, dir.path(), "csv");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("validate.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")), "{csv}");
}
