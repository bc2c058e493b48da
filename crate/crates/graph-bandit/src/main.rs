//! Command-line front end: run experiments, evaluate the bound calculus, and
//! export generated graphs.

use clap::{Parser, Subcommand};
use graph_bandit::graph::write_edge_list;
use graph_bandit::harness::{
    self, analyze, emit_csv, load_config, render_bounds_csv, ExperimentConfig, HarnessError,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "graph-bandit",
    about = "Superlevel-set identification over graph-structured bandit arms",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config and write CSV curves.
    Run {
        config: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's trial count.
        #[arg(long)]
        trials: Option<u64>,
        /// Directory for curves.csv and aggregates.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the complexity report, tuned gamma, and critical iteration for
    /// each graph-aware policy, and write bound curves as CSV.
    Analyze {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Which trial's graph/signal draw to analyze.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Number of log-spaced horizons for the bound curves.
        #[arg(long, default_value_t = 60)]
        grid: usize,
        /// Directory for bounds.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Generate the config's graph and write it as an edge-list file.
    GenGraph {
        config: PathBuf,
        /// Output edge-list path.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Which trial's graph draw to export.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

fn apply_overrides(config: &mut ExperimentConfig, seed: Option<u64>, trials: Option<u64>) {
    if let Some(seed) = seed {
        config.run.seed = seed;
    }
    if let Some(trials) = trials {
        config.run.trials = trials;
    }
}

fn set_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn real_main() -> Result<bool, HarnessError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            out_dir,
            threads,
        } => {
            set_threads(threads);
            let mut config = load_config(&config)?;
            apply_overrides(&mut config, seed, trials);
            let output = harness::run(&config)?;
            emit_csv(&output, &out_dir)?;
            for policy in &output.policies {
                let final_median = policy.aggregate.median.last().copied();
                match final_median {
                    Some(e) => println!(
                        "{} (gamma {}): {} trials, final median E = {:.6}",
                        policy.label,
                        policy.gamma,
                        policy.curves.len(),
                        e
                    ),
                    None => println!(
                        "{} (gamma {}): no completed trials",
                        policy.label, policy.gamma
                    ),
                }
            }
            for failure in &output.failures {
                eprintln!(
                    "trial failed: policy {} trial {}: {}",
                    failure.policy, failure.trial, failure.message
                );
            }
            println!(
                "wrote {} and {}",
                out_dir.join("curves.csv").display(),
                out_dir.join("aggregates.csv").display()
            );
            Ok(output.failures.is_empty())
        }
        Command::Analyze {
            config,
            seed,
            trial,
            grid,
            out_dir,
        } => {
            let mut config = load_config(&config)?;
            apply_overrides(&mut config, seed, None);
            let reports = analyze(&config, trial, grid)?;
            for report in &reports {
                println!("policy {} (gamma {})", report.label, report.gamma);
                println!("  H        = {:.6e}", report.complexity.h);
                match report.complexity.h_tilde {
                    Some(v) => println!("  H_tilde  = {v:.6e}"),
                    None => println!("  H_tilde  = undefined (no separated arm)"),
                }
                match report.complexity.h_star {
                    Some(v) => println!("  H_star   = {v:.6e}"),
                    None => println!("  H_star   = undefined (no separated arm)"),
                }
                println!("  N_small  = {}", report.complexity.n_small);
                println!(
                    "  ||mu - {} 1||_L = {:.6e}",
                    report.complexity.offset, report.complexity.smoothness
                );
                println!("  R        = {}", report.sub_gaussian_r);
                match &report.gamma_star {
                    Some(gs) => println!(
                        "  gamma*   = {:.6} (d' = {}, {} fixed-point iterations)",
                        gs.gamma, gs.d_prime, gs.iterations
                    ),
                    None => println!("  gamma*   = undefined (deterministic or flat signal)"),
                }
                match report.critical_iteration {
                    Some(t) => println!("  T_crit   = {t}"),
                    None => println!("  T_crit   = undefined (deterministic rewards)"),
                }
                let grid: Vec<String> = report
                    .bound_rows
                    .iter()
                    .step_by((report.bound_rows.len() / 8).max(1))
                    .map(|row| format!("d_{}={}", row.t, row.d_t))
                    .collect();
                println!("  effective dimension: {}", grid.join(", "));
            }
            std::fs::create_dir_all(&out_dir).map_err(|source| HarnessError::Io {
                path: out_dir.display().to_string(),
                source,
            })?;
            let path = out_dir.join("bounds.csv");
            std::fs::write(&path, render_bounds_csv(&reports)).map_err(|source| {
                HarnessError::Io {
                    path: path.display().to_string(),
                    source,
                }
            })?;
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::GenGraph {
            config,
            output,
            seed,
            trial,
        } => {
            let mut config = load_config(&config)?;
            apply_overrides(&mut config, seed, None);
            let graph = harness::trial_graph(&config, trial)?;
            write_edge_list(&graph, &output)?;
            println!(
                "wrote {} ({} vertices, {} edges)",
                output.display(),
                graph.n_vertices(),
                graph.edge_count()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
