//! Replay guarantees of the experiment runner: byte-identical CSV output
//! across repeated runs and across worker thread counts, plus an end-to-end
//! deterministic-rewards run in the tiny-gamma offset regime used for
//! label-propagation style problems.

use graph_bandit::harness::{
    parse_config, render_aggregates_csv, render_curves_csv, run, ExperimentConfig,
};

fn sbm_config(threads_tag: &str) -> ExperimentConfig {
    let text = format!(
        r#"
schema_version = 1

[graph]
kind = "sbm"
n = 40

[signal]
kind = "two_block"
high = 1.0
low = -1.0

[noise]
kind = "gaussian"
sigma = 2.0

[run]
tau = 0.0
epsilon = 0.01
t = 60
trials = 6
seed = 1234

[[policies]]
policy = "grapl"
gamma = 5.0
label = "grapl-{threads_tag}"

[[policies]]
policy = "nonadaptive_rr"
gamma = 5.0
label = "rr-{threads_tag}"

[[policies]]
policy = "apt"
label = "apt-{threads_tag}"
"#
    );
    parse_config(&text).unwrap()
}

#[test]
fn csv_output_is_identical_across_thread_counts() {
    let config = sbm_config("x");
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run(&config).unwrap());
    let quad = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| run(&config).unwrap());
    assert_eq!(render_curves_csv(&single), render_curves_csv(&quad));
    assert_eq!(render_aggregates_csv(&single), render_aggregates_csv(&quad));
}

#[test]
fn emitted_files_are_bitwise_identical_across_runs() {
    let config = sbm_config("y");
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    graph_bandit::harness::emit_csv(&run(&config).unwrap(), dir_a.path()).unwrap();
    graph_bandit::harness::emit_csv(&run(&config).unwrap(), dir_b.path()).unwrap();
    for name in ["curves.csv", "aggregates.csv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn deterministic_offset_run_with_tiny_gamma_converges() {
    // Binary labels on two loose clusters, deterministic rewards, offset
    // estimation at tau = 0.5 and a very small gamma: the regime where each
    // observation is trusted almost completely. The adaptive policy must
    // identify the superlevel set long before exhausting the arm budget.
    let text = r#"
schema_version = 1

[graph]
kind = "sbm"
n = 60
regenerate_per_trial = false

[signal]
kind = "two_block"
high = 1.0
low = 0.0

[noise]
kind = "deterministic"

[run]
tau = 0.5
epsilon = 0.01
t = 60
trials = 1
seed = 9

[[policies]]
policy = "grapl"
gamma = 1e-5
lambda = 1e-3
alpha = 1e-8
"#;
    let config = parse_config(text).unwrap();
    let output = run(&config).unwrap();
    assert!(output.failures.is_empty(), "{:?}", output.failures);
    let errors = &output.policies[0].curves[0].errors;
    let reached = errors
        .iter()
        .position(|&e| e <= 0.01)
        .expect("reaches 1% error");
    assert!(
        reached + 1 < 55,
        "took {} iterations to reach 1% error",
        reached + 1
    );
    assert_eq!(*errors.last().unwrap(), 0.0);
}

#[test]
fn shared_reward_stream_aligns_policies() {
    // With shared_rewards, two copies of the same policy see identical
    // rewards and produce identical curves.
    let text = r#"
schema_version = 1

[graph]
kind = "cliques"
cliques = 3
clique_size = 2

[signal]
kind = "explicit"
mu_blocks = [[2, 1.0], [2, 0.3], [2, -1.0]]

[noise]
kind = "gaussian"
sigma = 1.0

[run]
tau = 0.0
epsilon = 0.01
t = 30
trials = 2
seed = 77
shared_rewards = true

[[policies]]
policy = "grapl"
gamma = 2.0
label = "a"

[[policies]]
policy = "grapl"
gamma = 2.0
label = "b"
"#;
    let config = parse_config(text).unwrap();
    let output = run(&config).unwrap();
    let a = &output.policy("a").unwrap().curves;
    let b = &output.policy("b").unwrap().curves;
    for (ca, cb) in a.iter().zip(b.iter()) {
        assert_eq!(ca.errors, cb.errors);
    }
}
