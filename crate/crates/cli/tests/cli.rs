use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = r#"
n_values = [500, 1000]
replications = 20
seed = 4

[law]
name = "pareto_ceil"
tau = 3.5
"#;

fn confgraph(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_confgraph"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn successful_run_writes_csv_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = confgraph(&[
        "hopcount",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let survival = fs::read_to_string(out.join("survival_N500.csv")).unwrap();
    assert!(survival.starts_with("k,survival,n\n"));
    let m = manifest(&out);
    assert_eq!(m["mode"], "hopcount");
    assert_eq!(m["config"]["seed"], 4);
    assert_eq!(m["summaries"].as_array().unwrap().len(), 2);
    for key in ["mu", "nu", "sigma_n", "a_n", "q", "dropped_fraction"] {
        assert!(!m["summaries"][0][key].is_null(), "{key}");
    }
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["version"].is_string());
}

#[test]
fn component_sizes_are_ranked() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = confgraph(&["components", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("component_sizes_N1000.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rank,size"));
    let sizes: Vec<u64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(sizes.iter().sum::<u64>(), 1000);
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    for bad in [
        SMALL.replace("replications = 20", "replications = 0"),
        SMALL.replace("tau = 3.5", "tau = 1.5"),
        SMALL.replace("seed = 4", "seeed = 4"),
        format!("mode = \"fig1\"\n{SMALL}"),
        "not toml at all [".to_string(),
    ] {
        let cfg = write_config(tmp.path(), &bad);
        let o = confgraph(&["hopcount", "--config", &cfg, "--out", out]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
    }
    let missing = tmp.path().join("missing.toml");
    assert_eq!(
        confgraph(&["hopcount", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let cfg = write_config(tmp.path(), SMALL);
    assert_eq!(confgraph(&["nonsense", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(
        confgraph(&["hopcount", "--config", &cfg, "--threads", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn seed_flag_overrides_config_and_single_replication_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("replications = 20", "replications = 1"));
    let run = |seed: &str, name: &str| {
        let out = tmp.path().join(name);
        let o = confgraph(&[
            "hopcount",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("11", "a");
    let b = run("11", "b");
    assert_eq!(manifest(&a)["config"]["seed"], 11);
    assert_eq!(
        fs::read(a.join("hopcounts_N1000.csv")).unwrap(),
        fs::read(b.join("hopcounts_N1000.csv")).unwrap()
    );
    let rows = fs::read_to_string(a.join("hopcounts_N1000.csv")).unwrap();
    assert_eq!(rows.lines().count(), 2);
}

#[test]
fn oracle_bfs_flag_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = confgraph(&[
        "hopcount",
        "--config",
        &cfg,
        "--oracle-bfs",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(manifest(&out)["config"]["oracle_bfs"], true);
}
