//! Experiment execution: train per seed, persist artifacts, evaluate.
//!
//! Every run writes `<name>_seed<k>_episodes.csv` and
//! `<name>_seed<k>_weights.txt` into the output directory; a batch of
//! experiments additionally gets `summary.csv`, `summary.txt`, and
//! `regret_report.txt` at the directory root. Regrets pool every
//! experiment in the batch plus the expert, so they are comparable only
//! when the batch shares one environment configuration (the expert is
//! evaluated under the first spec's environment).

use std::path::{Path, PathBuf};

use aqil_core::{evaluate_policy, train, Counters, EpisodeLog, EvalReport, Expert, GreedyPolicy};

use crate::config::ExperimentSpec;
use crate::csv_io::write_episode_csv;
use crate::report::{
    aggregate_rows, regret_reports, render_regret_reports, render_summary_table, summarize_run,
    summary_csv_string, PolicyValue, RegretReport, SummaryRow,
};
use crate::weights_io::write_weights;
use crate::{io_err, AqilError};

/// Name of the expert's row in pooled regret reports.
pub const EXPERT_POLICY_NAME: &str = "expert";

/// One seed's training artifacts.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub experiment: String,
    pub seed: u64,
    pub logs: Vec<EpisodeLog>,
    pub counters: Counters,
    /// Greedy evaluation of the final network.
    pub eval: EvalReport,
    pub episodes_csv: PathBuf,
    pub weights_file: PathBuf,
    pub summary: SummaryRow,
}

/// All seeds of one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub outcomes: Vec<RunOutcome>,
    /// Per-seed summary rows followed by the aggregate row.
    pub rows: Vec<SummaryRow>,
}

/// Train an experiment on every seed, writing per-seed artifacts into
/// `out_dir`.
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_dir: &Path,
) -> Result<ExperimentResult, AqilError> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;

    let mut outcomes = Vec::with_capacity(spec.seeds.len());
    for &seed in &spec.seeds {
        let mut config = spec.train.clone();
        config.seed = seed;
        let out = train(&config, &spec.phases)?;

        let episodes_csv = out_dir.join(format!("{}_seed{}_episodes.csv", spec.name, seed));
        write_episode_csv(&episodes_csv, &out.logs)?;
        let weights_file = out_dir.join(format!("{}_seed{}_weights.txt", spec.name, seed));
        write_weights(&weights_file, &out.net)?;

        let mut policy = GreedyPolicy::new(&out.net);
        let eval = evaluate_policy(
            &mut policy,
            &config.physics,
            &config.reward,
            spec.eval_episodes,
            spec.eval_seed,
        )?;

        let summary = summarize_run(&spec.name, seed, &out.logs);
        outcomes.push(RunOutcome {
            experiment: spec.name.clone(),
            seed,
            logs: out.logs,
            counters: out.counters,
            eval,
            episodes_csv,
            weights_file,
            summary,
        });
    }

    let mut rows: Vec<SummaryRow> = outcomes.iter().map(|o| o.summary.clone()).collect();
    rows.push(aggregate_rows(&spec.name, &rows));
    Ok(ExperimentResult {
        spec: spec.clone(),
        outcomes,
        rows,
    })
}

/// Collapse an experiment's evaluations into one pooled policy value:
/// mean of per-seed evaluation means, best single evaluation episode.
pub fn experiment_policy_value(result: &ExperimentResult) -> PolicyValue {
    let n = result.outcomes.len() as f64;
    PolicyValue {
        name: result.spec.name.clone(),
        mean_score: result
            .outcomes
            .iter()
            .map(|o| o.eval.mean_score)
            .sum::<f64>()
            / n,
        best_score: result
            .outcomes
            .iter()
            .map(|o| o.eval.best_score)
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Greedy evaluation of a network under the default environment and
/// reward; the `evaluate`/`report` subcommands' code path.
pub fn evaluate_net_defaults(
    net: &aqil_core::QNetwork,
    episodes: u32,
    seed: u64,
) -> Result<EvalReport, AqilError> {
    let mut policy = GreedyPolicy::new(net);
    Ok(evaluate_policy(
        &mut policy,
        &aqil_core::PhysicsParams::default(),
        &aqil_core::RewardParams::default(),
        episodes,
        seed,
    )?)
}

/// The expert's pooled value under the default environment and reward.
pub fn expert_policy_value_defaults(episodes: u32, seed: u64) -> Result<PolicyValue, AqilError> {
    let mut expert = Expert::default();
    let report = evaluate_policy(
        &mut expert,
        &aqil_core::PhysicsParams::default(),
        &aqil_core::RewardParams::default(),
        episodes,
        seed,
    )?;
    Ok(PolicyValue {
        name: EXPERT_POLICY_NAME.to_owned(),
        mean_score: report.mean_score,
        best_score: report.best_score,
    })
}

/// Evaluate the expert controller under a spec's environment and
/// evaluation settings.
pub fn expert_policy_value(spec: &ExperimentSpec, name: &str) -> Result<PolicyValue, AqilError> {
    let mut expert = Expert::new(spec.train.pid, spec.train.feedback);
    let report = evaluate_policy(
        &mut expert,
        &spec.train.physics,
        &spec.train.reward,
        spec.eval_episodes,
        spec.eval_seed,
    )?;
    Ok(PolicyValue {
        name: name.to_owned(),
        mean_score: report.mean_score,
        best_score: report.best_score,
    })
}

/// Write the batch-level reports (`summary.csv`, `summary.txt`,
/// `regret_report.txt`) for a set of completed experiments and return the
/// pooled rows and regret reports.
pub fn write_run_reports(
    out_dir: &Path,
    results: &[ExperimentResult],
) -> Result<(Vec<SummaryRow>, Vec<RegretReport>), AqilError> {
    if results.is_empty() {
        return Err(AqilError::Config("no experiments to report on".into()));
    }

    let rows: Vec<SummaryRow> = results
        .iter()
        .flat_map(|r| r.rows.iter().cloned())
        .collect();
    let csv_path = out_dir.join("summary.csv");
    std::fs::write(&csv_path, summary_csv_string(&rows)).map_err(|e| io_err(&csv_path, e))?;
    let txt_path = out_dir.join("summary.txt");
    std::fs::write(&txt_path, render_summary_table(&rows)).map_err(|e| io_err(&txt_path, e))?;

    let mut values: Vec<PolicyValue> = results.iter().map(experiment_policy_value).collect();
    values.push(expert_policy_value(&results[0].spec, EXPERT_POLICY_NAME)?);
    let reports = regret_reports(&values, EXPERT_POLICY_NAME)?;
    let regret_path = out_dir.join("regret_report.txt");
    std::fs::write(&regret_path, render_regret_reports(&reports))
        .map_err(|e| io_err(&regret_path, e))?;

    Ok((rows, reports))
}
