//! Declarative experiment runner: seeded multi-trial simulations,
//! per-iteration error curves, quantile aggregation, and CSV emission.
//!
//! A run is described by a TOML [`ExperimentConfig`] (see the README for the
//! schema). Trials are independent work units executed in parallel; every
//! random stream is derived from `(seed, purpose, trial, ...)` through
//! [`stream_rng`], so outputs are bit-identical across runs and thread
//! counts.
//!
//! Stream layout per trial:
//! - graph draw: `(seed, [1, trial])`, shared by every policy in the trial
//!   (trial 0's graph is reused when regeneration is off);
//! - smooth-signal draw: `(seed, [2, trial])`;
//! - rewards: `(seed, [3, trial, policy_index])`, or `(seed, [3, trial])`
//!   for every policy when `shared_rewards` is set;
//! - policy-internal randomness (permutations, random schedules):
//!   `(seed, [4, trial, policy_index])`.
//!
//! Error curves record the misclassification error after every counted
//! iteration. Warm-up pulls a policy requests through `init_arms` (APT's two
//! sweeps) consume rewards but do not advance the iteration counter.

use crate::analysis::{
    complexities, critical_iteration, gamma_star, AnalysisError, SpectrumSummary,
};
use crate::env::{stream_rng, stream_seed, EnvError, NoiseModel, ProblemInstance};
use crate::graph::{
    gen_cliques, gen_sbm, gen_small_world, largest_connected_component, load_edge_list,
    load_labels, smooth_signal, GraphError, LaplacianOperator, WeightedGraph,
};
use crate::policy::{
    oracle_allocation, Apt, Grapl, NonAdaptive, OraclePolicy, Policy, PolicyError,
};
use crate::solver::EstimatorState;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

const GRAPH_STREAM: u64 = 1;
const SIGNAL_STREAM: u64 = 2;
const REWARD_STREAM: u64 = 3;
const POLICY_STREAM: u64 = 4;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Graph source: a generator or an edge-list file.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Sbm {
        n: usize,
        #[serde(default = "default_true")]
        regenerate_per_trial: bool,
    },
    SmallWorld {
        n: usize,
        k_ring: usize,
        p_new: f64,
        #[serde(default = "default_true")]
        regenerate_per_trial: bool,
    },
    Cliques {
        cliques: usize,
        clique_size: usize,
    },
    EdgeList {
        path: PathBuf,
        #[serde(default)]
        label_path: Option<PathBuf>,
        #[serde(default = "default_true")]
        largest_component: bool,
    },
}

fn default_true() -> bool {
    true
}

/// True mean vector source.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    /// Explicit mean vector, either element by element or as
    /// `(count, value)` blocks.
    Explicit {
        #[serde(default)]
        mu: Option<Vec<f64>>,
        #[serde(default)]
        mu_blocks: Option<Vec<(usize, f64)>>,
    },
    /// First half of the vertices at `high`, second half at `low`.
    TwoBlock { high: f64, low: f64 },
    /// Graph-smooth synthetic signal in `[0, 1]`, redrawn each trial.
    Smooth,
    /// Values from the graph's label file, mapped through the component
    /// extraction.
    Labels,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian { sigma: f64 },
    Bernoulli,
    Deterministic,
}

impl NoiseSpec {
    pub fn model(&self) -> NoiseModel {
        match *self {
            NoiseSpec::Gaussian { sigma } => NoiseModel::Gaussian { sigma },
            NoiseSpec::Bernoulli => NoiseModel::Bernoulli,
            NoiseSpec::Deterministic => NoiseModel::Deterministic,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub tau: f64,
    pub epsilon: f64,
    /// Iterations per trial.
    pub t: u64,
    pub trials: u64,
    pub seed: u64,
    /// Share one reward stream across policies within a trial instead of
    /// seeding independently per (trial, policy).
    #[serde(default)]
    pub shared_rewards: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Grapl,
    NonadaptiveRr,
    NonadaptiveRandom,
    Apt,
    Oracle,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Grapl => "grapl",
            PolicyKind::NonadaptiveRr => "nonadaptive_rr",
            PolicyKind::NonadaptiveRandom => "nonadaptive_random",
            PolicyKind::Apt => "apt",
            PolicyKind::Oracle => "oracle",
        }
    }

    fn uses_graph(&self) -> bool {
        !matches!(self, PolicyKind::Apt)
    }
}

fn default_lambda() -> f64 {
    1e-3
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub policy: PolicyKind,
    /// Regularization weight; required for every graph-aware policy.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Estimate relative to the threshold offset. Defaults to on whenever
    /// `tau != 0`.
    #[serde(default)]
    pub offset: Option<bool>,
    #[serde(default)]
    pub label: Option<String>,
    /// Per-policy trial-count override.
    #[serde(default)]
    pub trials: Option<u64>,
}

impl PolicySpec {
    pub fn display_label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.policy.name().to_string())
    }

    /// The gamma reported in CSV output; APT carries 0.
    pub fn reported_gamma(&self) -> f64 {
        self.gamma.unwrap_or(0.0)
    }

    pub fn offset_value(&self, tau: f64) -> f64 {
        let on = self.offset.unwrap_or(tau != 0.0);
        if on {
            tau
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub graph: GraphSpec,
    pub signal: SignalSpec,
    pub noise: NoiseSpec,
    pub run: RunSpec,
    pub policies: Vec<PolicySpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.run.t < 1 {
            return Err(HarnessError::Config("t must be at least 1".into()));
        }
        if self.run.trials < 1 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(HarnessError::Config("at least one policy required".into()));
        }
        for spec in &self.policies {
            if spec.policy.uses_graph() {
                match spec.gamma {
                    Some(g) if g > 0.0 && g.is_finite() => {}
                    Some(g) => {
                        return Err(HarnessError::Config(format!(
                            "policy {}: gamma must be positive, got {g}",
                            spec.display_label()
                        )));
                    }
                    None => {
                        return Err(HarnessError::Config(format!(
                            "policy {}: gamma is required",
                            spec.display_label()
                        )));
                    }
                }
            }
            if let Some(trials) = spec.trials {
                if trials < 1 {
                    return Err(HarnessError::Config(format!(
                        "policy {}: trials must be at least 1",
                        spec.display_label()
                    )));
                }
            }
        }
        if matches!(self.signal, SignalSpec::Labels)
            && !matches!(
                self.graph,
                GraphSpec::EdgeList {
                    label_path: Some(_),
                    ..
                }
            )
        {
            return Err(HarnessError::Config(
                "signal kind `labels` requires an edge_list graph with label_path".into(),
            ));
        }
        if let SignalSpec::Explicit { mu, mu_blocks } = &self.signal {
            match (mu, mu_blocks) {
                (Some(_), None) | (None, Some(_)) => {}
                _ => {
                    return Err(HarnessError::Config(
                        "explicit signal needs exactly one of `mu` or `mu_blocks`".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Parses a TOML config string.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let config: ExperimentConfig = toml::from_str(text)?;
    config.validate()?;
    Ok(config)
}

/// Loads and validates a TOML config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Fixed resources loaded once per run (edge-list graphs and labels).
enum GraphSource {
    Generated(GraphSpec),
    Fixed {
        graph: Arc<WeightedGraph>,
        labels: Option<Arc<Vec<f64>>>,
    },
}

impl GraphSource {
    fn prepare(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        match &config.graph {
            GraphSpec::EdgeList {
                path,
                label_path,
                largest_component,
            } => {
                let full = load_edge_list(path)?;
                let (graph, index_map) = if *largest_component {
                    let lcc = largest_connected_component(&full)?;
                    (lcc.graph, Some(lcc.original_index))
                } else {
                    (full, None)
                };
                let labels = match label_path {
                    Some(lp) => {
                        let raw = load_labels(lp)?;
                        let resolve = |old: usize| -> Result<f64, HarnessError> {
                            raw.get(old).copied().flatten().ok_or_else(|| {
                                HarnessError::Config(format!(
                                    "label file {} has no entry for vertex {old}",
                                    lp.display()
                                ))
                            })
                        };
                        let values = match &index_map {
                            Some(map) => map
                                .iter()
                                .map(|&old| resolve(old))
                                .collect::<Result<Vec<_>, _>>()?,
                            None => (0..graph.n_vertices())
                                .map(resolve)
                                .collect::<Result<Vec<_>, _>>()?,
                        };
                        Some(Arc::new(values))
                    }
                    None => None,
                };
                Ok(GraphSource::Fixed {
                    graph: Arc::new(graph),
                    labels,
                })
            }
            spec => Ok(GraphSource::Generated(spec.clone())),
        }
    }

    /// The graph a given trial runs on.
    fn graph(&self, seed: u64, trial: u64) -> Result<Arc<WeightedGraph>, HarnessError> {
        match self {
            GraphSource::Fixed { graph, .. } => Ok(Arc::clone(graph)),
            GraphSource::Generated(spec) => {
                let draw_trial = match spec {
                    GraphSpec::Sbm {
                        regenerate_per_trial: true,
                        ..
                    }
                    | GraphSpec::SmallWorld {
                        regenerate_per_trial: true,
                        ..
                    } => trial,
                    _ => 0,
                };
                let graph_seed = stream_seed(seed, &[GRAPH_STREAM, draw_trial]);
                let graph = match spec {
                    GraphSpec::Sbm { n, .. } => gen_sbm(*n, graph_seed)?,
                    GraphSpec::SmallWorld { n, k_ring, p_new, .. } => {
                        gen_small_world(*n, *k_ring, *p_new, graph_seed)?
                    }
                    GraphSpec::Cliques {
                        cliques,
                        clique_size,
                    } => gen_cliques(*cliques, *clique_size)?,
                    GraphSpec::EdgeList { .. } => unreachable!("edge lists are fixed"),
                };
                Ok(Arc::new(graph))
            }
        }
    }

    fn labels(&self) -> Option<Arc<Vec<f64>>> {
        match self {
            GraphSource::Fixed { labels, .. } => labels.clone(),
            GraphSource::Generated(_) => None,
        }
    }
}

fn build_signal(
    config: &ExperimentConfig,
    source: &GraphSource,
    graph: &WeightedGraph,
    trial: u64,
) -> Result<Vec<f64>, HarnessError> {
    let n = graph.n_vertices();
    let mu = match &config.signal {
        SignalSpec::Explicit { mu, mu_blocks } => match (mu, mu_blocks) {
            (Some(values), _) => values.clone(),
            (None, Some(blocks)) => {
                let mut out = Vec::new();
                for &(count, value) in blocks {
                    out.extend(std::iter::repeat_n(value, count));
                }
                out
            }
            _ => unreachable!("validated"),
        },
        SignalSpec::TwoBlock { high, low } => {
            if !n.is_multiple_of(2) {
                return Err(HarnessError::Config(format!(
                    "two_block signal needs an even vertex count, got {n}"
                )));
            }
            let mut out = vec![*high; n / 2];
            out.extend(std::iter::repeat_n(*low, n / 2));
            out
        }
        SignalSpec::Smooth => {
            let signal_seed = stream_seed(config.run.seed, &[SIGNAL_STREAM, trial]);
            smooth_signal(graph, signal_seed)?
        }
        SignalSpec::Labels => source
            .labels()
            .ok_or_else(|| HarnessError::Config("labels signal without a label file".into()))?
            .as_ref()
            .clone(),
    };
    if mu.len() != n {
        return Err(HarnessError::Config(format!(
            "signal length {} does not match graph size {n}",
            mu.len()
        )));
    }
    Ok(mu)
}

fn build_policy(
    spec: &PolicySpec,
    policy_index: usize,
    instance: &ProblemInstance,
    graph: &WeightedGraph,
    run: &RunSpec,
    trial: u64,
) -> Result<Box<dyn Policy>, HarnessError> {
    let tau = run.tau;
    let epsilon = run.epsilon;
    let n = graph.n_vertices();
    if spec.policy == PolicyKind::Apt {
        return Ok(Box::new(Apt::new(n, tau, epsilon)?));
    }
    let gamma = spec.gamma.expect("validated");
    let laplacian = Arc::new(LaplacianOperator::new(graph, spec.lambda)?);
    let offset = spec.offset_value(tau);
    let estimator = EstimatorState::new(laplacian, gamma, offset)?;
    let mut policy_rng = stream_rng(run.seed, &[POLICY_STREAM, trial, policy_index as u64]);
    Ok(match spec.policy {
        PolicyKind::Grapl => Box::new(Grapl::new(estimator, spec.alpha, tau, epsilon)?),
        PolicyKind::NonadaptiveRr => {
            let mut permutation: Vec<usize> = (0..n).collect();
            permutation.shuffle(&mut policy_rng);
            Box::new(NonAdaptive::round_robin(estimator, tau, permutation)?)
        }
        PolicyKind::NonadaptiveRandom => {
            Box::new(NonAdaptive::uniform_random(estimator, tau, policy_rng))
        }
        PolicyKind::Oracle => {
            let beta = oracle_allocation(instance)?;
            Box::new(OraclePolicy::new(estimator, tau, beta, run.t)?)
        }
        PolicyKind::Apt => unreachable!(),
    })
}

/// One trial's per-iteration error trajectory.
#[derive(Debug, Clone)]
pub struct TrialCurve {
    pub trial: u64,
    /// `errors[t - 1]` is the misclassification error after iteration `t`.
    pub errors: Vec<f64>,
}

/// Median and quartiles across trials at each iteration.
#[derive(Debug, Clone, Default)]
pub struct AggregateCurve {
    pub median: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
}

/// All trials of one configured policy.
#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub label: String,
    pub gamma: f64,
    pub curves: Vec<TrialCurve>,
    pub aggregate: AggregateCurve,
}

#[derive(Debug, Clone)]
pub struct TrialFailure {
    pub policy: String,
    pub trial: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub policies: Vec<PolicyRun>,
    pub failures: Vec<TrialFailure>,
}

impl RunOutput {
    pub fn policy(&self, label: &str) -> Option<&PolicyRun> {
        self.policies.iter().find(|p| p.label == label)
    }
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn aggregate(curves: &[TrialCurve], t: u64) -> AggregateCurve {
    let t = t as usize;
    let mut agg = AggregateCurve {
        median: Vec::with_capacity(t),
        q25: Vec::with_capacity(t),
        q75: Vec::with_capacity(t),
    };
    if curves.is_empty() {
        return agg;
    }
    let mut column = Vec::with_capacity(curves.len());
    for step in 0..t {
        column.clear();
        column.extend(curves.iter().map(|c| c.errors[step]));
        column.sort_by(|a, b| a.total_cmp(b));
        agg.q25.push(quantile(&column, 0.25));
        agg.median.push(quantile(&column, 0.5));
        agg.q75.push(quantile(&column, 0.75));
    }
    agg
}

fn run_trial(
    config: &ExperimentConfig,
    source: &GraphSource,
    spec: &PolicySpec,
    policy_index: usize,
    trial: u64,
) -> Result<TrialCurve, HarnessError> {
    let run = &config.run;
    let graph = source.graph(run.seed, trial)?;
    let mu = build_signal(config, source, &graph, trial)?;
    let instance = ProblemInstance::new(mu, run.tau, run.epsilon, config.noise.model())?;
    let mut policy = build_policy(spec, policy_index, &instance, &graph, run, trial)?;

    let reward_path: &[u64] = if run.shared_rewards {
        &[REWARD_STREAM, trial]
    } else {
        &[REWARD_STREAM, trial, policy_index as u64]
    };
    let mut rewards = stream_rng(run.seed, reward_path);

    let init_arms = policy.init_arms();
    let init_pulls = init_arms.len() as u64;
    for arm in init_arms {
        let x = instance.pull(arm, &mut rewards);
        policy.observe(arm, x)?;
    }
    let mut errors = Vec::with_capacity(run.t as usize);
    for _ in 1..=run.t {
        let arm = policy.select();
        let x = instance.pull(arm, &mut rewards);
        policy.observe(arm, x)?;
        errors.push(instance.error_rate(&policy.estimate()));
    }
    debug_assert_eq!(
        policy.counts().iter().sum::<u64>(),
        run.t + init_pulls,
        "one pull per iteration plus init pulls"
    );
    Ok(TrialCurve { trial, errors })
}

/// Executes every (policy, trial) pair in parallel. A failed trial is
/// recorded as a diagnostic and the remaining trials continue.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let source = GraphSource::prepare(config)?;

    let mut tasks = Vec::new();
    for (policy_index, spec) in config.policies.iter().enumerate() {
        let trials = spec.trials.unwrap_or(config.run.trials);
        for trial in 0..trials {
            tasks.push((policy_index, trial));
        }
    }
    let results: Vec<(usize, u64, Result<TrialCurve, String>)> = tasks
        .par_iter()
        .map(|&(policy_index, trial)| {
            let result = run_trial(
                config,
                &source,
                &config.policies[policy_index],
                policy_index,
                trial,
            )
            .map_err(|e| e.to_string());
            (policy_index, trial, result)
        })
        .collect();

    let mut per_policy: Vec<Vec<TrialCurve>> = vec![Vec::new(); config.policies.len()];
    let mut failures = Vec::new();
    for (policy_index, trial, result) in results {
        match result {
            Ok(curve) => per_policy[policy_index].push(curve),
            Err(message) => failures.push(TrialFailure {
                policy: config.policies[policy_index].display_label(),
                trial,
                message,
            }),
        }
    }
    let policies = config
        .policies
        .iter()
        .zip(per_policy)
        .map(|(spec, mut curves)| {
            curves.sort_by_key(|c| c.trial);
            let aggregate = aggregate(&curves, config.run.t);
            PolicyRun {
                label: spec.display_label(),
                gamma: spec.reported_gamma(),
                curves,
                aggregate,
            }
        })
        .collect();
    Ok(RunOutput { policies, failures })
}

/// Floats in CSV output carry 10 significant digits.
fn fmt_float(x: f64) -> String {
    format!("{x:.9e}")
}

/// Long-format per-trial curves: `policy,gamma,trial,t,E`.
pub fn render_curves_csv(output: &RunOutput) -> String {
    let mut out = String::from("policy,gamma,trial,t,E\n");
    for policy in &output.policies {
        let gamma = fmt_float(policy.gamma);
        for curve in &policy.curves {
            for (step, e) in curve.errors.iter().enumerate() {
                out.push_str(&policy.label);
                out.push(',');
                out.push_str(&gamma);
                out.push(',');
                out.push_str(&curve.trial.to_string());
                out.push(',');
                out.push_str(&(step + 1).to_string());
                out.push(',');
                out.push_str(&fmt_float(*e));
                out.push('\n');
            }
        }
    }
    out
}

/// Aggregate curves: `policy,gamma,t,median,q25,q75`.
pub fn render_aggregates_csv(output: &RunOutput) -> String {
    let mut out = String::from("policy,gamma,t,median,q25,q75\n");
    for policy in &output.policies {
        let gamma = fmt_float(policy.gamma);
        for step in 0..policy.aggregate.median.len() {
            out.push_str(&policy.label);
            out.push(',');
            out.push_str(&gamma);
            out.push(',');
            out.push_str(&(step + 1).to_string());
            out.push(',');
            out.push_str(&fmt_float(policy.aggregate.median[step]));
            out.push(',');
            out.push_str(&fmt_float(policy.aggregate.q25[step]));
            out.push(',');
            out.push_str(&fmt_float(policy.aggregate.q75[step]));
            out.push('\n');
        }
    }
    out
}

/// Writes `curves.csv` and `aggregates.csv` into `out_dir`.
pub fn emit_csv(output: &RunOutput, out_dir: impl AsRef<Path>) -> Result<(), HarnessError> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for (name, content) in [
        ("curves.csv", render_curves_csv(output)),
        ("aggregates.csv", render_aggregates_csv(output)),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

/// The graph a given trial of this config would run on (for export and
/// analysis).
pub fn trial_graph(
    config: &ExperimentConfig,
    trial: u64,
) -> Result<Arc<WeightedGraph>, HarnessError> {
    config.validate()?;
    let source = GraphSource::prepare(config)?;
    source.graph(config.run.seed, trial)
}

/// One policy's analysis block: hardness, smoothness, tuned gamma, critical
/// iteration, and bound curves over a horizon grid.
#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub label: String,
    pub gamma: f64,
    pub complexity: crate::analysis::ComplexityReport,
    pub sub_gaussian_r: f64,
    pub gamma_star: Option<crate::analysis::GammaStar>,
    pub critical_iteration: Option<u64>,
    pub bound_rows: Vec<BoundRow>,
}

/// Bound values at one horizon; each entry is `(value, condition_met)` or
/// `None` when the quantity is undefined for the instance.
#[derive(Debug, Clone)]
pub struct BoundRow {
    pub t: u64,
    pub d_t: usize,
    pub adaptive: Option<(f64, bool)>,
    pub nonadaptive: Option<(f64, bool)>,
    pub oracle: Option<(f64, bool)>,
    pub simplified: Option<(f64, bool)>,
}

/// Log-spaced integer grid over `[1, t_max]`.
pub fn horizon_grid(t_max: u64, points: usize) -> Vec<u64> {
    let mut grid = Vec::new();
    let t_max = t_max.max(1);
    let log_max = (t_max as f64).ln();
    for k in 0..points {
        let f = if points <= 1 {
            1.0
        } else {
            k as f64 / (points - 1) as f64
        };
        let t = (log_max * f).exp().round() as u64;
        let t = t.clamp(1, t_max);
        if grid.last() != Some(&t) {
            grid.push(t);
        }
    }
    grid
}

/// Runs the analysis calculus for every graph-aware policy at one trial's
/// graph and signal.
pub fn analyze(
    config: &ExperimentConfig,
    trial: u64,
    grid_points: usize,
) -> Result<Vec<AnalysisReport>, HarnessError> {
    config.validate()?;
    let source = GraphSource::prepare(config)?;
    let graph = source.graph(config.run.seed, trial)?;
    let mu = build_signal(config, &source, &graph, trial)?;
    let instance = ProblemInstance::new(
        mu,
        config.run.tau,
        config.run.epsilon,
        config.noise.model(),
    )?;
    let r = instance.sub_gaussian_r();

    let mut reports = Vec::new();
    for spec in &config.policies {
        if !spec.policy.uses_graph() {
            continue;
        }
        let gamma = spec.gamma.expect("validated");
        let laplacian = LaplacianOperator::new(&graph, spec.lambda)?;
        let offset = spec.offset_value(config.run.tau);
        let complexity = complexities(&instance, &laplacian, offset);
        let spectrum = SpectrumSummary::compute(&laplacian)?;

        let gamma_star_value = if r > 0.0 && complexity.smoothness > 0.0 {
            Some(gamma_star(&complexity, &spectrum, spec.alpha, r)?)
        } else {
            None
        };
        let critical = if r > 0.0 {
            Some(critical_iteration(
                &complexity,
                &spectrum,
                gamma,
                r,
                spec.alpha,
            )?)
        } else {
            None
        };
        let mut bound_rows = Vec::new();
        for t in horizon_grid(config.run.t, grid_points) {
            let d_t = spectrum.effective_dimension(t, gamma);
            let pack = |b: Result<crate::analysis::BoundValue, AnalysisError>| {
                b.ok().map(|v| (v.value, v.condition_met))
            };
            bound_rows.push(BoundRow {
                t,
                d_t,
                adaptive: pack(crate::analysis::bound_adaptive(
                    &complexity,
                    &spectrum,
                    t,
                    gamma,
                    r,
                    spec.alpha,
                )),
                nonadaptive: pack(crate::analysis::bound_nonadaptive(
                    &complexity,
                    &spectrum,
                    t,
                    gamma,
                    r,
                )),
                oracle: pack(crate::analysis::bound_oracle(
                    &complexity,
                    &spectrum,
                    t,
                    gamma,
                    r,
                )),
                simplified: pack(crate::analysis::bound_adaptive_simplified(
                    &complexity,
                    &spectrum,
                    t,
                    gamma,
                    r,
                    spec.alpha,
                )),
            });
        }
        reports.push(AnalysisReport {
            label: spec.display_label(),
            gamma,
            complexity,
            sub_gaussian_r: r,
            gamma_star: gamma_star_value,
            critical_iteration: critical,
            bound_rows,
        });
    }
    Ok(reports)
}

/// Bound curves as CSV:
/// `policy,gamma,t,d_t,adaptive,adaptive_ok,nonadaptive,nonadaptive_ok,oracle,oracle_ok,simplified,simplified_ok`.
pub fn render_bounds_csv(reports: &[AnalysisReport]) -> String {
    let mut out = String::from(
        "policy,gamma,t,d_t,adaptive,adaptive_ok,nonadaptive,nonadaptive_ok,oracle,oracle_ok,simplified,simplified_ok\n",
    );
    let cell = |v: &Option<(f64, bool)>| match v {
        Some((value, ok)) => format!("{},{}", fmt_float(*value), ok),
        None => "nan,false".to_string(),
    };
    for report in reports {
        for row in &report.bound_rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                report.label,
                fmt_float(report.gamma),
                row.t,
                row.d_t,
                cell(&row.adaptive),
                cell(&row.nonadaptive),
                cell(&row.oracle),
                cell(&row.simplified),
            ));
        }
    }
    out
}
