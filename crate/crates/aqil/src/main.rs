//! `aqil` — train, evaluate, and compare Q-learning regimes on a
//! pole-balancing cart.
//!
//! Exit codes: 0 success, 1 configuration error (bad names, malformed
//! files, invalid hyperparameters, usage errors), 2 runtime error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aqil::config::{load_config, ExperimentSpec, DEFAULT_EVAL_EPISODES, DEFAULT_EVAL_SEED};
use aqil::csv_io::read_episode_csv;
use aqil::report::{
    aggregate_rows, regret_reports, render_regret_reports, render_summary_table, summarize_run,
    PolicyValue, SummaryRow,
};
use aqil::runner::{run_experiment, write_run_reports, ExperimentResult, EXPERT_POLICY_NAME};
use aqil::svg::write_experiment_svg;
use aqil::weights_io::read_weights;
use aqil::{expert_policy_value_defaults, AqilError};

#[derive(Parser)]
#[command(
    name = "aqil",
    version,
    about = "Train and compare Q-learning regimes on a pole-balancing cart"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment (RL500, IL250, IL500, IL250+RL250) or every
    /// section of a config file
    Run {
        /// Experiment name or path to a config file
        target: String,
        /// Comma-separated seeds overriding the experiment's own list
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory for CSVs, weights, and reports
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Also write per-experiment SVG training curves
        #[arg(long)]
        svg: bool,
    },
    /// Greedy evaluation of a saved weight file under the default
    /// environment
    Evaluate {
        /// Weight file written by `aqil run`
        #[arg(long)]
        weights: PathBuf,
        /// Evaluation episodes
        #[arg(long, default_value_t = DEFAULT_EVAL_EPISODES)]
        episodes: u32,
        /// Seed of the evaluation start states
        #[arg(long, default_value_t = DEFAULT_EVAL_SEED)]
        seed: u64,
    },
    /// Summarize a directory of finished runs and recompute regrets under
    /// the default environment
    Report {
        /// Directory holding `*_episodes.csv` and `*_weights.txt` files
        #[arg(long)]
        runs: PathBuf,
        /// Evaluation episodes per policy
        #[arg(long, default_value_t = DEFAULT_EVAL_EPISODES)]
        episodes: u32,
        /// Seed of the evaluation start states
        #[arg(long, default_value_t = DEFAULT_EVAL_SEED)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let usage_ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if usage_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };

    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), AqilError> {
    match cli.command {
        Command::Run {
            target,
            seeds,
            out,
            svg,
        } => cmd_run(&target, seeds, &out, svg),
        Command::Evaluate {
            weights,
            episodes,
            seed,
        } => cmd_evaluate(&weights, episodes, seed),
        Command::Report {
            runs,
            episodes,
            seed,
        } => cmd_report(&runs, episodes, seed),
    }
}

/// Resolve the run target: a reserved experiment name or a config file.
fn resolve_specs(target: &str) -> Result<Vec<ExperimentSpec>, AqilError> {
    if let Some(spec) = ExperimentSpec::named(target) {
        return Ok(vec![spec]);
    }
    let path = Path::new(target);
    if path.exists() {
        return load_config(path);
    }
    Err(AqilError::Config(format!(
        "`{target}` is neither a reserved experiment name (RL500, IL250, IL500, IL250+RL250) \
         nor an existing config file"
    )))
}

fn cmd_run(target: &str, seeds: Option<Vec<u64>>, out: &Path, svg: bool) -> Result<(), AqilError> {
    let mut specs = resolve_specs(target)?;
    if let Some(seeds) = seeds {
        if seeds.is_empty() {
            return Err(AqilError::Config("--seeds list is empty".into()));
        }
        for spec in &mut specs {
            spec.seeds = seeds.clone();
        }
    }

    let mut results: Vec<ExperimentResult> = Vec::with_capacity(specs.len());
    for spec in &specs {
        println!(
            "running {} ({} phase{}, seeds {:?})",
            spec.name,
            spec.phases.len(),
            if spec.phases.len() == 1 { "" } else { "s" },
            spec.seeds
        );
        let result = run_experiment(spec, out)?;
        for outcome in &result.outcomes {
            println!(
                "  seed {}: {} episodes, train mean {:.2}, eval mean {:.2}",
                outcome.seed,
                outcome.logs.len(),
                outcome.summary.mean_score,
                outcome.eval.mean_score,
            );
        }
        if svg {
            let path = write_experiment_svg(&result, out)?;
            println!("  curves: {}", path.display());
        }
        results.push(result);
    }

    let (rows, reports) = write_run_reports(out, &results)?;
    println!();
    print!("{}", render_summary_table(&rows));
    println!();
    print!("{}", render_regret_reports(&reports));
    println!("artifacts written to {}", out.display());
    Ok(())
}

fn cmd_evaluate(weights: &Path, episodes: u32, seed: u64) -> Result<(), AqilError> {
    if episodes == 0 {
        return Err(AqilError::Config("--episodes must be at least 1".into()));
    }
    let net = read_weights(weights)?;
    let report = aqil::evaluate_net_defaults(&net, episodes, seed)?;
    println!(
        "{} episodes, mean score {:.4}, best score {:.4}",
        episodes, report.mean_score, report.best_score
    );
    for (i, (score, steps)) in report.scores.iter().zip(&report.steps).enumerate() {
        println!("  episode {}: score {:.4}, steps {}", i + 1, score, steps);
    }
    Ok(())
}

fn cmd_report(runs: &Path, episodes: u32, seed: u64) -> Result<(), AqilError> {
    if episodes == 0 {
        return Err(AqilError::Config("--episodes must be at least 1".into()));
    }

    // Discover `<experiment>_seed<k>_weights.txt` files.
    let mut groups: BTreeMap<String, Vec<(u64, PathBuf)>> = BTreeMap::new();
    let entries = std::fs::read_dir(runs).map_err(|e| AqilError::Io {
        path: runs.to_path_buf(),
        source: e,
    })?;
    for entry in entries {
        let entry = entry.map_err(|e| AqilError::Io {
            path: runs.to_path_buf(),
            source: e,
        })?;
        let file_name = entry.file_name();
        let Some(name) = file_name.to_str() else {
            continue;
        };
        let Some(stem) = name.strip_suffix("_weights.txt") else {
            continue;
        };
        // Experiment names may contain underscores; split on the last
        // `_seed` marker.
        let Some((experiment, seed_str)) = stem.rsplit_once("_seed") else {
            continue;
        };
        let Ok(run_seed) = seed_str.parse::<u64>() else {
            continue;
        };
        groups
            .entry(experiment.to_owned())
            .or_default()
            .push((run_seed, entry.path()));
    }
    if groups.is_empty() {
        return Err(AqilError::Config(format!(
            "{}: no `*_weights.txt` files found",
            runs.display()
        )));
    }

    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut values: Vec<PolicyValue> = Vec::new();
    for (experiment, mut seeds) in groups {
        seeds.sort();
        let mut seed_rows = Vec::new();
        let mut eval_means = Vec::new();
        let mut eval_best = f64::NEG_INFINITY;
        for (run_seed, weights_path) in &seeds {
            let csv = runs.join(format!("{experiment}_seed{run_seed}_episodes.csv"));
            if csv.exists() {
                let logs = read_episode_csv(&csv)?;
                seed_rows.push(summarize_run(&experiment, *run_seed, &logs));
            }
            let net = read_weights(weights_path)?;
            let report = aqil::evaluate_net_defaults(&net, episodes, seed)?;
            eval_means.push(report.mean_score);
            eval_best = eval_best.max(report.best_score);
        }
        if !seed_rows.is_empty() {
            rows.extend(seed_rows.iter().cloned());
            rows.push(aggregate_rows(&experiment, &seed_rows));
        }
        values.push(PolicyValue {
            name: experiment,
            mean_score: eval_means.iter().sum::<f64>() / eval_means.len() as f64,
            best_score: eval_best,
        });
    }

    values.push(expert_policy_value_defaults(episodes, seed)?);
    let reports = regret_reports(&values, EXPERT_POLICY_NAME)?;

    if !rows.is_empty() {
        print!("{}", render_summary_table(&rows));
        println!();
    }
    print!("{}", render_regret_reports(&reports));
    Ok(())
}
