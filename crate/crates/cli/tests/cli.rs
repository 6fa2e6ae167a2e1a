use std::path::Path;
use std::process::{Command, Output};

use levyx_cli::{parse_config_str, Format, RunManifest};

const BASE: &str = "gamma = 1.5\nalpha = 0.2\nbeta = 0.8\nkappa = 1\ntheta = 0\nN = 64\n";

fn levyx(args: &[&str], dir: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_levyx"));
    cmd.args(args).current_dir(dir).env_remove("LEVYX_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn digests(dir: &Path) -> Vec<(String, String)> {
    let m = RunManifest::read(dir).unwrap();
    m.outputs.into_iter().map(|f| (f.path, f.sha256)).collect()
}

#[test]
fn stationary_large_kappa_is_close_to_the_reaction_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &BASE.replace("kappa = 1", "kappa = 1e4"),
    );
    let o = levyx(
        &["stationary", "--config", &cfg, "--out", "out"],
        tmp.path(),
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let csv = std::fs::read_to_string(out.join("stationary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("u,rho"));
    assert_eq!(lines.count(), 255);

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    let sup = report["metrics"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["name"] == "sup_distance_to_rho_bar_inf")
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!(sup <= 0.01, "{sup}");

    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.command, "stationary");
    assert_eq!(m.status, "ok");
    assert!(m.verify(&out).unwrap().is_empty());
    let mut names: Vec<_> = m.outputs.iter().map(|f| f.path.as_str()).collect();
    names.sort_unstable();
    assert_eq!(names, ["report.json", "stationary.csv"]);
}

#[test]
fn simulate_is_deterministic_in_the_seed_and_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!("{BASE}replicas = 3\n[simulate]\nT = 0.02\nobserve = [0.0, 0.01, 0.02]\n"),
    );
    let run = |out: &str, seed: &str, threads: &str| {
        let o = levyx(
            &["simulate", "--config", &cfg, "--out", out, "--seed", seed],
            tmp.path(),
            &[("LEVYX_THREADS", threads)],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        digests(&tmp.path().join(out))
    };
    let a = run("a", "7", "1");
    let b = run("b", "7", "3");
    let c = run("c", "8", "2");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), 4);

    let csv = std::fs::read_to_string(tmp.path().join("a/snapshots_000.csv")).unwrap();
    assert!(csv.starts_with("t,site,occupied\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 63);
    let m = RunManifest::read(&tmp.path().join("a")).unwrap();
    assert_eq!(m.master_seed, 7);
    assert_eq!(m.replica_seeds, levyx_core::rng::replica_seeds(7, 3));
    assert_eq!(m.threads, 1);
}

#[test]
fn manifest_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!("{BASE}[pde]\nN_grid = 32\nT = 0.05\ndt = 0.01\n"),
    );
    let o = levyx(
        &["solve", "--config", &cfg, "--out", "first"],
        tmp.path(),
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m = RunManifest::read(&tmp.path().join("first")).unwrap();

    let json = serde_json::to_string(&m.config).unwrap();
    assert_eq!(parse_config_str(&json, Format::Json).unwrap(), m.config);
    let again = write_config(tmp.path(), "again.json", &json);
    let o = levyx(
        &["solve", "--config", &again, "--out", "second"],
        tmp.path(),
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        digests(&tmp.path().join("first")),
        digests(&tmp.path().join("second"))
    );

    let csv = std::fs::read_to_string(tmp.path().join("first/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,u,rho\n"));
    assert_eq!(csv.lines().count(), 1 + 6 * 31);
}

#[test]
fn hydro_with_zero_replicas_fails_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", BASE);
    let o = levyx(
        &[
            "verify-hydro",
            "--config",
            &cfg,
            "--out",
            "out",
            "--replicas",
            "0",
        ],
        tmp.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("replicas"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn failed_metric_exits_with_distinct_status() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!("{BASE}replicas = 2\n[hydro]\ncheckpoints = [0.01]\ntolerance = 1e-9\nbin_width = 0.125\n"),
    );
    let o = levyx(
        &["verify-hydro", "--config", &cfg, "--out", "out"],
        tmp.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL sup_distance"));
    let out = tmp.path().join("out");
    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.status, "metric-failure");
    assert_eq!(m.replica_seeds.len(), 2);
    let profile = std::fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(profile.starts_with("t,u,density,se,reference\n"));
}

#[test]
fn config_errors_name_the_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (BASE.replace("gamma", "gama"), "did you mean `gamma`"),
        (BASE.replace("1.5", "2.5"), "gamma must lie in (1,2)"),
        (
            BASE.replace("0.2", "0.9").replace("0.8", "0.2"),
            "alpha <= beta",
        ),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("c{i}.toml"), text);
        let o = levyx(
            &["stationary", "--config", &cfg, "--out", "out"],
            tmp.path(),
            &[],
        );
        assert_eq!(o.status.code(), Some(1));
        assert!(stderr(&o).contains(needle), "{}", stderr(&o));
    }
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn json_format_and_theta_rules() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!("{BASE}[stationary]\nN_grid = 16\n"),
    );
    let o = levyx(
        &[
            "stationary",
            "--config",
            &cfg,
            "--out",
            "out",
            "--format",
            "json",
        ],
        tmp.path(),
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("out/stationary.json")).unwrap())
            .unwrap();
    assert_eq!(v["rho"].as_array().unwrap().len(), 15);

    let cfg = write_config(
        tmp.path(),
        "t.toml",
        &BASE.replace("theta = 0", "theta = 0.1"),
    );
    let o = levyx(
        &[
            "verify-hydro",
            "--config",
            &cfg,
            "--out",
            "h",
            "--replicas",
            "2",
        ],
        tmp.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("theta"), "{}", stderr(&o));
    let cfg = write_config(tmp.path(), "z.toml", BASE);
    let o = levyx(
        &["explore-theta", "--config", &cfg, "--out", "e"],
        tmp.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(!tmp.path().join("e").exists());
}

#[test]
fn operator_export_lists_every_entry() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!("{BASE}[operator]\ngammas = [1.5]\nNs = [128, 256]\nexport = true\nbumps = [{{ center = 0.5, width = 0.3 }}]\n"),
    );
    let o = levyx(
        &["operator-check", "--config", &cfg, "--out", "out"],
        tmp.path(),
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("out/operator_matrix.csv")).unwrap();
    assert!(csv.starts_with("row,col,value\n"));
    assert_eq!(csv.lines().count(), 1 + 127 * 127);
    assert!(
        tmp.path().join("out/operator.csv").exists()
            && tmp.path().join("out/operator_matrix.csv").exists()
            && tmp.path().join("out/tails.csv").exists()
    );
}
