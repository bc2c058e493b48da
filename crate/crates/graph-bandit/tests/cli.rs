//! End-to-end checks of the command-line interface: exit codes, emitted
//! files, and the gen-graph -> edge-list round trip.

use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graph-bandit"))
}

const GOOD_CONFIG: &str = r#"
schema_version = 1

[graph]
kind = "cliques"
cliques = 2
clique_size = 3

[signal]
kind = "explicit"
mu_blocks = [[3, 1.0], [3, -1.0]]

[noise]
kind = "gaussian"
sigma = 1.0

[run]
tau = 0.0
epsilon = 0.01
t = 25
trials = 3
seed = 11

[[policies]]
policy = "grapl"
gamma = 2.0

[[policies]]
policy = "apt"
"#;

#[test]
fn run_writes_curves_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, GOOD_CONFIG).unwrap();
    let out = binary()
        .args(["run"])
        .arg(&config_path)
        .args(["--out-dir"])
        .arg(dir.path())
        .args(["--threads", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curves = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert!(curves.starts_with("policy,gamma,trial,t,E\n"));
    // 2 policies x 3 trials x 25 iterations + header
    assert_eq!(curves.trim_end().lines().count(), 1 + 2 * 3 * 25);
    assert!(dir.path().join("aggregates.csv").exists());
}

#[test]
fn run_exits_nonzero_when_trials_fail() {
    // Every arm inside the epsilon band: the oracle allocation is undefined
    // and all of its trials fail.
    let config = GOOD_CONFIG
        .replace("mu_blocks = [[3, 1.0], [3, -1.0]]", "mu_blocks = [[3, 0.001], [3, -0.001]]")
        .replace("policy = \"grapl\"", "policy = \"oracle\"");
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, config).unwrap();
    let out = binary()
        .args(["run"])
        .arg(&config_path)
        .args(["--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("trial failed"), "stderr: {stderr}");
}

#[test]
fn invalid_config_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, "schema_version = 99\n").unwrap();
    let out = binary().args(["run"]).arg(&config_path).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn gen_graph_round_trips_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, GOOD_CONFIG).unwrap();
    let edge_path = dir.path().join("graph.txt");
    let out = binary()
        .args(["gen-graph"])
        .arg(&config_path)
        .args(["-o"])
        .arg(&edge_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let graph = graph_bandit::graph::load_edge_list(&edge_path).unwrap();
    assert_eq!(graph.n_vertices(), 6);
    assert_eq!(graph.edge_count(), 6); // two triangles
}

#[test]
fn analyze_writes_bounds_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, GOOD_CONFIG).unwrap();
    let out = binary()
        .args(["analyze"])
        .arg(&config_path)
        .args(["--out-dir"])
        .arg(dir.path())
        .args(["--grid", "10"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("gamma*"));
    assert!(stdout.contains("T_crit"));
    let bounds = std::fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert!(bounds.starts_with("policy,gamma,t,d_t,"));
    assert!(bounds.lines().count() > 5);
}
