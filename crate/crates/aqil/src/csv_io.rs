//! Episode-log CSV persistence.
//!
//! Schema (fixed column order): `episode,phase,steps,score,mean_loss,epsilon`.
//! Floats are written with Rust's shortest round-trip formatting, so a
//! parse of an emitted file reproduces every value bit for bit — which is
//! what makes byte-comparing CSVs a meaningful determinism check. Wall-clock
//! timings deliberately never enter the file.

use std::path::Path;

use aqil_core::{EpisodeLog, Mode};

use crate::{io_err, parse_fail_at, AqilError};

/// The fixed header line.
pub const EPISODE_CSV_HEADER: &str = "episode,phase,steps,score,mean_loss,epsilon";

/// Render episode logs as CSV text.
pub fn episode_csv_string(logs: &[EpisodeLog]) -> String {
    let mut out = String::with_capacity(64 * (logs.len() + 1));
    out.push_str(EPISODE_CSV_HEADER);
    out.push('\n');
    for log in logs {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            log.episode, log.phase, log.steps, log.score, log.mean_loss, log.epsilon
        ));
    }
    out
}

/// Write episode logs to `path`.
pub fn write_episode_csv(path: &Path, logs: &[EpisodeLog]) -> Result<(), AqilError> {
    std::fs::write(path, episode_csv_string(logs)).map_err(|e| io_err(path, e))
}

/// Read an episode CSV back; wall-clock time is not persisted and reads
/// as zero.
pub fn read_episode_csv(path: &Path) -> Result<Vec<EpisodeLog>, AqilError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_episode_csv(&text, path)
}

/// Parse episode CSV text.
pub fn parse_episode_csv(text: &str, origin: &Path) -> Result<Vec<EpisodeLog>, AqilError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == EPISODE_CSV_HEADER => {}
        Some((_, header)) => {
            return parse_fail_at(origin, 1, format!("unexpected header `{header}`"));
        }
        None => return parse_fail_at(origin, 1, "empty file".into()),
    }

    let mut logs = Vec::new();
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
        let num = |pos: usize, what: &str| -> Result<f64, AqilError> {
            fields[pos].parse::<f64>().or_else(|_| {
                parse_fail_at(origin, line_no, format!("bad {what} `{}`", fields[pos]))
            })
        };
        let phase = match fields[1] {
            "imitation" => Mode::Imitation,
            "reinforcement" => Mode::Reinforcement,
            other => {
                return parse_fail_at(origin, line_no, format!("unknown phase `{other}`"));
            }
        };
        logs.push(EpisodeLog {
            episode: fields[0].parse().or_else(|_| {
                parse_fail_at(origin, line_no, format!("bad episode `{}`", fields[0]))
            })?,
            phase,
            steps: fields[2].parse().or_else(|_| {
                parse_fail_at(origin, line_no, format!("bad steps `{}`", fields[2]))
            })?,
            score: num(3, "score")?,
            mean_loss: num(4, "mean_loss")?,
            epsilon: num(5, "epsilon")?,
            wall_time_s: 0.0,
        });
    }
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_logs() -> Vec<EpisodeLog> {
        vec![
            EpisodeLog {
                episode: 1,
                phase: Mode::Imitation,
                steps: 137,
                score: 118.420_319_204_812_33,
                mean_loss: 0.031_4e-3,
                epsilon: 1.0,
                wall_time_s: 0.5,
            },
            EpisodeLog {
                episode: 2,
                phase: Mode::Reinforcement,
                steps: 42,
                score: 0.1 + 0.2, // deliberately not a round decimal
                mean_loss: f64::MIN_POSITIVE,
                epsilon: 0.995,
                wall_time_s: 1.5,
            },
        ]
    }

    #[test]
    fn round_trip_is_bitwise_exact() {
        let logs = sample_logs();
        let text = episode_csv_string(&logs);
        let back = parse_episode_csv(&text, Path::new("mem.csv")).unwrap();
        assert_eq!(back.len(), logs.len());
        for (a, b) in logs.iter().zip(&back) {
            assert_eq!(a.episode, b.episode);
            assert_eq!(a.phase, b.phase);
            assert_eq!(a.steps, b.steps);
            assert_eq!(a.score.to_bits(), b.score.to_bits());
            assert_eq!(a.mean_loss.to_bits(), b.mean_loss.to_bits());
            assert_eq!(a.epsilon.to_bits(), b.epsilon.to_bits());
            // Wall time never enters the file.
            assert_eq!(b.wall_time_s, 0.0);
        }
    }

    #[test]
    fn header_and_schema_are_enforced() {
        let origin = Path::new("mem.csv");
        assert!(parse_episode_csv("", origin).is_err());
        assert!(parse_episode_csv("episode,steps\n", origin).is_err());
        let bad_fields = format!("{EPISODE_CSV_HEADER}\n1,imitation,3\n");
        assert!(parse_episode_csv(&bad_fields, origin).is_err());
        let bad_phase = format!("{EPISODE_CSV_HEADER}\n1,dreaming,3,1.0,0.0,1.0\n");
        assert!(parse_episode_csv(&bad_phase, origin).is_err());
        let bad_number = format!("{EPISODE_CSV_HEADER}\n1,imitation,3,abc,0.0,1.0\n");
        assert!(parse_episode_csv(&bad_number, origin).is_err());
    }

    #[test]
    fn file_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("episodes.csv");
        let logs = sample_logs();
        write_episode_csv(&path, &logs).unwrap();
        let back = read_episode_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].score.to_bits(), logs[0].score.to_bits());
    }
}
