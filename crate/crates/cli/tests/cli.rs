use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn stochlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochlab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("STOCHLAB_OUT")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn run_ok(dir: &Path, cfg: &str, out: &str, extra: &[&str]) -> Value {
    let mut args = vec!["run", "--config", cfg, "--out", out];
    args.extend(extra);
    let o = stochlab(&args, dir);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    manifest(&dir.join(out))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

const BALL: &str = r#"
experiment = "exit_ball"
[params]
n_paths = 2000
"#;

#[test]
fn exit_ball_mean_and_manifest_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "ball.toml", BALL);
    let m = run_ok(tmp.path(), &cfg, "out", &[]);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["params"]["n_paths"], 2000);
    assert_eq!(m["config"]["params"]["h"], 1e-3);
    let s: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/summary.json")).unwrap()).unwrap();
    assert!((s["mean_time"].as_f64().unwrap() - 0.5).abs() < 0.05);
    for o in m["outputs"].as_array().unwrap() {
        let data = fs::read(tmp.path().join("out").join(o["file"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), stochlab_cli::output::sha256_hex(&data));
        assert_eq!(o["bytes"].as_u64().unwrap(), data.len() as u64);
    }
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "ball.toml", BALL);
    let a = run_ok(tmp.path(), &cfg, "a", &[]);
    let b = run_ok(tmp.path(), &cfg, "b", &["--threads", "1"]);
    let c = run_ok(tmp.path(), &cfg, "c", &["--seed", "7"]);
    assert_eq!(a["outputs"], b["outputs"]);
    assert_eq!(a["config_sha256"], b["config_sha256"]);
    assert_ne!(a["outputs"], c["outputs"]);
    assert_ne!(a["config_sha256"], c["config_sha256"]);
    assert_eq!(c["seed"], 7);
}

#[test]
fn unknown_key_is_a_positioned_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.toml",
        "experiment = \"exit_ball\"\n[params]\nn_path = 10\n",
    );
    let o = stochlab(&["run", "--config", &cfg, "--out", "out"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3, column 1"), "{err}");
    assert!(err.contains("n_path"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn invalid_values_and_models_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        "experiment = \"exit_ball\"\n[params]\nradius = -1.0\n",
        "experiment = \"arcsine\"\n[model]\npreset = \"bm\"\n",
        "experiment = \"fokker_planck\"\n[model]\npreset = \"gradient\"\npotential = \"x^\"\n",
        "experiment = \"no_such_thing\"\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("c{i}.toml"), text);
        let o = stochlab(&["run", "--config", &cfg, "--out", "out"], tmp.path());
        assert_eq!(o.status.code(), Some(1), "case {i}");
    }
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn failing_run_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    // Λ(t) = 1/t is infinite at the middle of the t grid
    let text = "experiment = \"legendre\"\n[params]\nlambda = \"1/t\"\nt_min = -1.0\nt_max = 1.0\nn_t = 3\n";
    let cfg = write(tmp.path(), "leg.toml", text);
    let o = stochlab(&["run", "--config", &cfg, "--out", "out"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn flagged_runs_exit_with_two_and_keep_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "ma.json",
        r#"{"experiment": "min_action", "params": {"max_iter": 1, "n_steps": 400}}"#,
    );
    let o = stochlab(&["run", "--config", &cfg, "--out", "out"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let m = manifest(&tmp.path().join("out"));
    assert_eq!(m["status"], "flagged");
    assert_eq!(m["flags"].as_array().unwrap().len(), 1);
    assert_eq!(header(&tmp.path().join("out/path.csv")), "t,x0");
}

#[test]
fn list_and_templates() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stochlab(&["list"], tmp.path());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 10);
    assert!(text.contains("arrhenius"));
    let t = stochlab(&["template", "quasipotential"], tmp.path());
    let text = String::from_utf8(t.stdout).unwrap();
    assert!(text.contains("t_list") && text.contains("preset = \"gradient\""));
    assert_eq!(stochlab(&["template", "nope"], tmp.path()).status.code(), Some(1));
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "w.toml", "experiment = \"wiener\"\n[params]\nlevels = 2\n");
    let o = Command::new(env!("CARGO_BIN_EXE_stochlab"))
        .args(["run", "--config", &cfg])
        .current_dir(tmp.path())
        .env("STOCHLAB_OUT", tmp.path().join("env_root"))
        .output()
        .unwrap();
    assert!(o.status.success());
    let path = tmp.path().join("env_root/wiener/path.csv");
    assert_eq!(header(&path), "level,t,w");
    // 9 + 17 + 33 nodes
    assert_eq!(fs::read_to_string(path).unwrap().lines().count(), 1 + 9 + 17 + 33);
}

#[test]
fn arrhenius_table_and_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
experiment = "arrhenius"
[params]
eps = [0.5, 0.35, 0.25]
n_paths = 400
"#;
    let cfg = write(tmp.path(), "arr.toml", text);
    run_ok(tmp.path(), &cfg, "out", &[]);
    let out = tmp.path().join("out");
    assert_eq!(header(&out.join("arrhenius.csv")), "eps,eps_log_mean_tau,stderr");
    let rows: Vec<Vec<f64>> = fs::read_to_string(out.join("arrhenius.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[0][0] > w[1][0]));
    assert!(rows.iter().all(|r| r[1] > 0.0 && r[2] > 0.0));

    let p = stochlab(&["plot-data", "out"], tmp.path());
    assert!(p.status.success());
    let tidy = String::from_utf8(p.stdout).unwrap();
    assert!(tidy.starts_with("source,series,x,y,y_lo,y_hi\n"));
    let line = tidy
        .lines()
        .find(|l| l.starts_with("arrhenius.csv,eps_log_mean_tau,"))
        .unwrap();
    let f: Vec<f64> = line.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
    assert!(f[2] < f[1] && f[1] < f[3]);
    assert_eq!(stochlab(&["plot-data", "missing"], tmp.path()).status.code(), Some(1));
}

#[test]
fn contraction_series_respects_its_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "experiment = \"hairer_mattingly\"\n[params]\nn_nodes = 101\nn_pairs = 200\npde_dt = 1e-2\n";
    let cfg = write(tmp.path(), "hm.toml", text);
    run_ok(tmp.path(), &cfg, "out", &[]);
    let path = tmp.path().join("out/rho_decay.csv");
    assert_eq!(header(&path), "n,rho_beta_distance,bound");
    for line in fs::read_to_string(path).unwrap().lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] <= v[2] * (1.0 + 1e-12), "{line}");
    }
}
