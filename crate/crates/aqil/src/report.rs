//! Summaries and regret reports.
//!
//! A [`SummaryRow`] condenses one run's training log into the comparison
//! columns (run-mean score, best single episode, trailing-50 mean); the
//! aggregate row averages per-seed means. A [`RegretReport`] compares
//! evaluated policies against the expert and a proxy optimum: since the
//! true optimal policy is unobservable, V̂(π″) is taken as the best value
//! observed across every evaluated policy — mean or single-episode — in
//! the pool. Reinforcement regret is *constructed* as imitation regret +
//! expert regret, so the telescoping identity holds exactly, down to the
//! last bit, in every report.

use std::fmt::Write as _;
use std::path::Path;

use aqil_core::EpisodeLog;

use crate::{parse_fail_at, AqilError};

/// One line of the comparison table.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    /// `None` marks the aggregate across seeds.
    pub seed: Option<u64>,
    pub episodes: u32,
    /// Mean episode score over the whole run.
    pub mean_score: f64,
    /// Best single-episode score.
    pub best_score: f64,
    /// Mean over the final 50 episodes (or all of them, if fewer).
    pub last50_mean: f64,
}

/// Summarize one seed's training log.
pub fn summarize_run(experiment: &str, seed: u64, logs: &[EpisodeLog]) -> SummaryRow {
    assert!(!logs.is_empty(), "cannot summarize an empty run");
    let n = logs.len();
    let mean_score = logs.iter().map(|l| l.score).sum::<f64>() / n as f64;
    let best_score = logs
        .iter()
        .map(|l| l.score)
        .fold(f64::NEG_INFINITY, f64::max);
    let tail = &logs[n.saturating_sub(50)..];
    let last50_mean = tail.iter().map(|l| l.score).sum::<f64>() / tail.len() as f64;
    SummaryRow {
        experiment: experiment.to_owned(),
        seed: Some(seed),
        episodes: n as u32,
        mean_score,
        best_score,
        last50_mean,
    }
}

/// Aggregate per-seed rows of one experiment: mean of means, max of bests.
pub fn aggregate_rows(experiment: &str, rows: &[SummaryRow]) -> SummaryRow {
    assert!(!rows.is_empty(), "cannot aggregate zero rows");
    let n = rows.len() as f64;
    SummaryRow {
        experiment: experiment.to_owned(),
        seed: None,
        episodes: rows[0].episodes,
        mean_score: rows.iter().map(|r| r.mean_score).sum::<f64>() / n,
        best_score: rows
            .iter()
            .map(|r| r.best_score)
            .fold(f64::NEG_INFINITY, f64::max),
        last50_mean: rows.iter().map(|r| r.last50_mean).sum::<f64>() / n,
    }
}

/// Render rows as an aligned text table.
pub fn render_summary_table(rows: &[SummaryRow]) -> String {
    let mut cells: Vec<[String; 6]> = Vec::with_capacity(rows.len() + 1);
    cells.push([
        "experiment".into(),
        "seed".into(),
        "episodes".into(),
        "mean".into(),
        "best".into(),
        "last50".into(),
    ]);
    for r in rows {
        cells.push([
            r.experiment.clone(),
            r.seed.map_or_else(|| "all".into(), |s| s.to_string()),
            r.episodes.to_string(),
            format!("{:.2}", r.mean_score),
            format!("{:.2}", r.best_score),
            format!("{:.2}", r.last50_mean),
        ]);
    }
    let mut widths = [0usize; 6];
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &cells {
        for (i, (w, cell)) in widths.iter().zip(row).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i == 0 {
                // Left-align the name column, right-align numbers.
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "{cell:>w$}");
            }
        }
        // Trim the padding on the last column.
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    }
    out
}

/// The summary CSV header.
pub const SUMMARY_CSV_HEADER: &str = "experiment,seed,episodes,mean_score,best_score,last50_mean";

/// Render rows as CSV with full-precision floats.
pub fn summary_csv_string(rows: &[SummaryRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(SUMMARY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.experiment,
            r.seed.map_or_else(|| "all".into(), |s| s.to_string()),
            r.episodes,
            r.mean_score,
            r.best_score,
            r.last50_mean
        );
    }
    out
}

/// Parse a summary CSV produced by [`summary_csv_string`].
pub fn parse_summary_csv(text: &str, origin: &Path) -> Result<Vec<SummaryRow>, AqilError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == SUMMARY_CSV_HEADER => {}
        Some((_, header)) => {
            return parse_fail_at(origin, 1, format!("unexpected header `{header}`"));
        }
        None => return parse_fail_at(origin, 1, "empty file".into()),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return parse_fail_at(
                origin,
                line_no,
                format!("expected 6 fields, got {}", fields.len()),
            );
        }
        let num = |pos: usize| -> Result<f64, AqilError> {
            fields[pos].parse::<f64>().or_else(|_| {
                parse_fail_at(origin, line_no, format!("bad number `{}`", fields[pos]))
            })
        };
        let seed =
            if fields[1] == "all" {
                None
            } else {
                Some(fields[1].parse::<u64>().or_else(|_| {
                    parse_fail_at(origin, line_no, format!("bad seed `{}`", fields[1]))
                })?)
            };
        rows.push(SummaryRow {
            experiment: fields[0].to_owned(),
            seed,
            episodes: fields[2].parse().or_else(|_| {
                parse_fail_at(origin, line_no, format!("bad episodes `{}`", fields[2]))
            })?,
            mean_score: num(3)?,
            best_score: num(4)?,
            last50_mean: num(5)?,
        });
    }
    Ok(rows)
}

/// One evaluated policy entering a regret pool.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyValue {
    pub name: String,
    /// Mean greedy evaluation score, V̂(π).
    pub mean_score: f64,
    /// Best single evaluation episode.
    pub best_score: f64,
}

/// Regret decomposition of one policy against the expert and the proxy
/// optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    pub policy: String,
    /// V̂(π): the policy's mean evaluation score.
    pub v_policy: f64,
    /// V̂(π′): the expert's mean evaluation score.
    pub v_expert: f64,
    /// V̂(π″): proxy optimum — the best value observed in the pool.
    pub v_star: f64,
    /// V̂(π′) − V̂(π).
    pub imitation_regret: f64,
    /// V̂(π″) − V̂(π′); identical for every policy in a pool.
    pub expert_regret: f64,
    /// Imitation regret + expert regret (exact telescoping by
    /// construction).
    pub reinforcement_regret: f64,
    /// Whether reinforcement regret ≤ expert regret.
    pub goal_met: bool,
}

/// Build one report per pooled policy. The entry named `expert_name` plays
/// π′; the proxy optimum V̂(π″) is the maximum over every mean and best
/// score in the pool.
pub fn regret_reports(
    values: &[PolicyValue],
    expert_name: &str,
) -> Result<Vec<RegretReport>, AqilError> {
    let expert = values
        .iter()
        .find(|v| v.name == expert_name)
        .ok_or_else(|| {
            AqilError::Config(format!("regret pool has no policy named `{expert_name}`"))
        })?;
    let v_expert = expert.mean_score;
    let v_star = values
        .iter()
        .flat_map(|v| [v.mean_score, v.best_score])
        .fold(f64::NEG_INFINITY, f64::max);
    let expert_regret = v_star - v_expert;

    Ok(values
        .iter()
        .map(|v| {
            let imitation_regret = v_expert - v.mean_score;
            let reinforcement_regret = imitation_regret + expert_regret;
            RegretReport {
                policy: v.name.clone(),
                v_policy: v.mean_score,
                v_expert,
                v_star,
                imitation_regret,
                expert_regret,
                reinforcement_regret,
                goal_met: reinforcement_regret <= expert_regret,
            }
        })
        .collect())
}

/// Render regret reports as plain text.
pub fn render_regret_reports(reports: &[RegretReport]) -> String {
    let mut out = String::new();
    out.push_str("Regret report\n");
    out.push_str("=============\n");
    if let Some(first) = reports.first() {
        let _ = writeln!(
            out,
            "V(expert) = {:.4}; V(optimum proxy) = {:.4} (best value observed across all \
             evaluated policies; the true optimum is unobservable)",
            first.v_expert, first.v_star
        );
        out.push('\n');
    }
    for r in reports {
        let _ = writeln!(out, "policy {}", r.policy);
        let _ = writeln!(out, "  value (mean eval score)  {:.4}", r.v_policy);
        let _ = writeln!(out, "  imitation regret         {:.4}", r.imitation_regret);
        let _ = writeln!(out, "  expert regret            {:.4}", r.expert_regret);
        let _ = writeln!(
            out,
            "  reinforcement regret     {:.4}",
            r.reinforcement_regret
        );
        let _ = writeln!(
            out,
            "  goal (reinforcement regret ≤ expert regret): {}",
            if r.goal_met { "met" } else { "not met" }
        );
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use aqil_core::Mode;

    fn log(episode: u32, score: f64) -> EpisodeLog {
        EpisodeLog {
            episode,
            phase: Mode::Imitation,
            steps: 1,
            score,
            mean_loss: 0.0,
            epsilon: 1.0,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn summary_statistics_are_the_plain_definitions() {
        let logs: Vec<EpisodeLog> = (1..=60).map(|i| log(i, f64::from(i))).collect();
        let row = summarize_run("probe", 3, &logs);
        assert_eq!(row.episodes, 60);
        assert_eq!(row.mean_score, 30.5);
        assert_eq!(row.best_score, 60.0);
        // Last 50 scores: 11..=60 → mean 35.5.
        assert_eq!(row.last50_mean, 35.5);
        assert!(row.best_score >= row.mean_score);
    }

    #[test]
    fn short_runs_use_all_episodes_for_the_trailing_mean() {
        let logs: Vec<EpisodeLog> = (1..=3).map(|i| log(i, f64::from(i))).collect();
        let row = summarize_run("probe", 1, &logs);
        assert_eq!(row.last50_mean, 2.0);
    }

    #[test]
    fn aggregate_is_mean_of_means_and_max_of_bests() {
        let rows = vec![
            SummaryRow {
                experiment: "e".into(),
                seed: Some(1),
                episodes: 10,
                mean_score: 10.0,
                best_score: 30.0,
                last50_mean: 12.0,
            },
            SummaryRow {
                experiment: "e".into(),
                seed: Some(2),
                episodes: 10,
                mean_score: 20.0,
                best_score: 25.0,
                last50_mean: 18.0,
            },
        ];
        let agg = aggregate_rows("e", &rows);
        assert_eq!(agg.seed, None);
        assert_eq!(agg.mean_score, 15.0);
        assert_eq!(agg.best_score, 30.0);
        assert_eq!(agg.last50_mean, 15.0);
    }

    #[test]
    fn summary_csv_round_trips() {
        let rows = vec![
            summarize_run("a", 1, &[log(1, 0.1 + 0.2), log(2, 7.25)]),
            aggregate_rows(
                "a",
                &[summarize_run("a", 1, &[log(1, 0.1 + 0.2), log(2, 7.25)])],
            ),
        ];
        let text = summary_csv_string(&rows);
        let back = parse_summary_csv(&text, Path::new("mem.csv")).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn table_layout_contains_every_row() {
        let rows = vec![summarize_run(
            "RL500",
            1,
            &[log(1, 331.63), log(2, 1949.39)],
        )];
        let table = render_summary_table(&rows);
        assert!(table.contains("experiment"));
        assert!(table.contains("RL500"));
        assert!(table.contains("1140.51")); // mean of the two scores
        assert!(table.contains("1949.39"));
    }

    fn pool() -> Vec<PolicyValue> {
        vec![
            PolicyValue {
                name: "expert".into(),
                mean_score: 100.0,
                best_score: 120.0,
            },
            PolicyValue {
                name: "student".into(),
                mean_score: 80.0,
                best_score: 150.0,
            },
            PolicyValue {
                name: "ace".into(),
                mean_score: 130.0,
                best_score: 140.0,
            },
        ]
    }

    #[test]
    fn the_expert_has_zero_imitation_regret_against_itself() {
        let reports = regret_reports(&pool(), "expert").unwrap();
        let expert = reports.iter().find(|r| r.policy == "expert").unwrap();
        assert_eq!(expert.imitation_regret, 0.0);
        assert_eq!(
            expert.reinforcement_regret.to_bits(),
            expert.expert_regret.to_bits()
        );
        assert!(expert.goal_met);
    }

    #[test]
    fn the_proxy_optimum_is_the_pool_maximum() {
        let reports = regret_reports(&pool(), "expert").unwrap();
        // max over means (130) and bests (150) → 150.
        assert!(reports.iter().all(|r| r.v_star == 150.0));
        assert!(reports.iter().all(|r| r.expert_regret == 50.0));
    }

    #[test]
    fn telescoping_holds_bitwise_in_every_report() {
        let reports = regret_reports(&pool(), "expert").unwrap();
        for r in &reports {
            assert_eq!(
                r.reinforcement_regret.to_bits(),
                (r.imitation_regret + r.expert_regret).to_bits()
            );
        }
    }

    #[test]
    fn beating_the_expert_turns_the_goal_flag_on() {
        let reports = regret_reports(&pool(), "expert").unwrap();
        let ace = reports.iter().find(|r| r.policy == "ace").unwrap();
        assert!(ace.imitation_regret < 0.0);
        assert!(ace.goal_met);
        let student = reports.iter().find(|r| r.policy == "student").unwrap();
        assert!(student.imitation_regret > 0.0);
        assert!(!student.goal_met);
    }

    #[test]
    fn a_missing_expert_is_a_config_error() {
        let values = vec![PolicyValue {
            name: "student".into(),
            mean_score: 1.0,
            best_score: 1.0,
        }];
        assert!(matches!(
            regret_reports(&values, "expert"),
            Err(AqilError::Config(_))
        ));
    }
}
