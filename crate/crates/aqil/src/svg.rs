//! Standalone SVG training curves: per-seed episode scores on one panel,
//! per-seed mean losses on a second. Hand-rolled markup; no viewer-side
//! dependencies.

use std::fmt::Write as _;
use std::path::Path;

use aqil_core::EpisodeLog;

use crate::runner::ExperimentResult;
use crate::{io_err, AqilError};

const WIDTH: f64 = 860.0;
const PANEL_HEIGHT: f64 = 240.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 34.0;
const PANEL_GAP: f64 = 46.0;
const PALETTE: [&str; 6] = [
    "#3366cc", "#dc3912", "#109618", "#990099", "#ff9900", "#0099c6",
];

/// Render one experiment's training curves.
pub fn training_curves_svg(title: &str, runs: &[(u64, &[EpisodeLog])]) -> String {
    let height = MARGIN_TOP + 2.0 * PANEL_HEIGHT + PANEL_GAP + 30.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-size="15" font-weight="bold">{}</text>"#,
        MARGIN_LEFT,
        escape(title)
    );

    let score_top = MARGIN_TOP;
    panel(&mut out, "episode score", score_top, runs, |log| log.score);
    let loss_top = MARGIN_TOP + PANEL_HEIGHT + PANEL_GAP;
    panel(&mut out, "mean minibatch loss", loss_top, runs, |log| {
        log.mean_loss
    });

    // Legend: one swatch per seed.
    let legend_y = height - 12.0;
    let mut x = MARGIN_LEFT;
    for (i, (seed, _)) in runs.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{legend_y}">seed {seed}</text>"#,
            legend_y - 10.0,
            x + 16.0
        );
        x += 90.0;
    }

    out.push_str("</svg>\n");
    out
}

/// Draw one panel: frame, range labels, and a polyline per run.
fn panel(
    out: &mut String,
    label: &str,
    top: f64,
    runs: &[(u64, &[EpisodeLog])],
    metric: impl Fn(&EpisodeLog) -> f64,
) {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let bottom = top + PANEL_HEIGHT;

    let max_episodes = runs
        .iter()
        .map(|(_, logs)| logs.len())
        .max()
        .unwrap_or(1)
        .max(1);
    let mut max_y = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    for (_, logs) in runs {
        for log in *logs {
            let v = metric(log);
            max_y = max_y.max(v);
            min_y = min_y.min(v);
        }
    }
    if !max_y.is_finite() || !min_y.is_finite() {
        min_y = 0.0;
        max_y = 1.0;
    }
    // Anchor at zero for readability; rewards and losses are non-negative.
    min_y = min_y.min(0.0);
    if max_y <= min_y {
        max_y = min_y + 1.0;
    }

    let sx = |episode_idx: f64| {
        MARGIN_LEFT + episode_idx / (max_episodes as f64 - 1.0).max(1.0) * plot_w
    };
    let sy = |v: f64| bottom - (v - min_y) / (max_y - min_y) * PANEL_HEIGHT;

    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{PANEL_HEIGHT}" fill="none" stroke="#888"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" transform="rotate(-90 {} {})" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT - 48.0,
        top + PANEL_HEIGHT / 2.0,
        MARGIN_LEFT - 48.0,
        top + PANEL_HEIGHT / 2.0,
        escape(label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        MARGIN_LEFT - 6.0,
        top + 12.0,
        max_y
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        MARGIN_LEFT - 6.0,
        bottom,
        min_y
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">episode</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        bottom + 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{max_episodes}</text>"#,
        MARGIN_LEFT + plot_w,
        bottom + 16.0
    );

    for (i, (_, logs)) in runs.iter().enumerate() {
        if logs.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::with_capacity(logs.len() * 12);
        for (j, log) in logs.iter().enumerate() {
            let _ = write!(points, "{:.2},{:.2} ", sx(j as f64), sy(metric(log)));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            points.trim_end()
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Write `<name>_curves.svg` for a finished experiment; returns the path.
pub fn write_experiment_svg(
    result: &ExperimentResult,
    out_dir: &Path,
) -> Result<std::path::PathBuf, AqilError> {
    let runs: Vec<(u64, &[EpisodeLog])> = result
        .outcomes
        .iter()
        .map(|o| (o.seed, o.logs.as_slice()))
        .collect();
    let svg = training_curves_svg(&result.spec.name, &runs);
    let path = out_dir.join(format!("{}_curves.svg", result.spec.name));
    std::fs::write(&path, svg).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use aqil_core::Mode;

    fn logs(n: u32, scale: f64) -> Vec<EpisodeLog> {
        (1..=n)
            .map(|i| EpisodeLog {
                episode: i,
                phase: Mode::Imitation,
                steps: i,
                score: f64::from(i) * scale,
                mean_loss: 1.0 / f64::from(i),
                epsilon: 1.0,
                wall_time_s: 0.0,
            })
            .collect()
    }

    #[test]
    fn svg_has_one_polyline_per_seed_per_panel() {
        let a = logs(40, 1.0);
        let b = logs(40, 2.0);
        let svg = training_curves_svg("probe", &[(1, &a), (2, &b)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains("seed 1"));
        assert!(svg.contains("episode score"));
        assert!(svg.contains("mean minibatch loss"));
    }

    #[test]
    fn titles_are_escaped() {
        let a = logs(3, 1.0);
        let svg = training_curves_svg("a<b&c", &[(1, &a)]);
        assert!(svg.contains("a&lt;b&amp;c"));
        assert!(!svg.contains("a<b"));
    }

    #[test]
    fn degenerate_inputs_still_render() {
        let empty: &[EpisodeLog] = &[];
        let svg = training_curves_svg("empty", &[(1, empty)]);
        assert!(svg.contains("</svg>"));
        let one = logs(1, 0.0);
        let svg = training_curves_svg("one", &[(1, &one)]);
        assert!(svg.contains("<polyline"));
    }
}
