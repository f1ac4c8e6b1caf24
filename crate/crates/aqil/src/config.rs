//! Experiment specifications: the four named training regimes and a flat
//! `key = value` config-file format that exposes every hyperparameter.
//!
//! A config file holds one `[section]` per experiment. Reserved section
//! names (`RL500`, `IL250`, `IL500`, `IL250+RL250`) carry their fixed phase
//! budgets; any other section must declare `phases` explicitly. All keys
//! are optional and default to the standard hyperparameters, and unknown
//! keys are errors so typos cannot silently fall back to defaults.

use std::collections::BTreeSet;
use std::path::Path;

use aqil_core::{Mode, Phase, TargetSync, TrainConfig, DEG_PER_RAD};

use crate::{io_err, parse_fail_at, AqilError};

/// Greedy evaluation episodes per trained policy.
pub const DEFAULT_EVAL_EPISODES: u32 = 20;
/// Seed of the evaluation start-state stream; shared across policies so
/// they face identical initial conditions.
pub const DEFAULT_EVAL_SEED: u64 = 1000;
/// Seeds used when a spec does not list its own.
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// One experiment: a phase schedule plus everything needed to run and
/// evaluate it over a list of seeds.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub name: String,
    pub phases: Vec<Phase>,
    /// Hyperparameters; the `seed` field is replaced per run from `seeds`.
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub eval_episodes: u32,
    pub eval_seed: u64,
}

impl ExperimentSpec {
    /// The phase budget a reserved experiment name stands for.
    pub fn named_phases(name: &str) -> Option<Vec<Phase>> {
        match name {
            "RL500" => Some(vec![Phase::reinforcement(500)]),
            "IL250" => Some(vec![Phase::imitation(250)]),
            "IL500" => Some(vec![Phase::imitation(500)]),
            "IL250+RL250" => Some(vec![Phase::imitation(250), Phase::reinforcement(250)]),
            _ => None,
        }
    }

    /// A reserved experiment under default hyperparameters.
    pub fn named(name: &str) -> Option<ExperimentSpec> {
        Some(ExperimentSpec {
            name: name.to_owned(),
            phases: Self::named_phases(name)?,
            train: TrainConfig::default(),
            seeds: DEFAULT_SEEDS.to_vec(),
            eval_episodes: DEFAULT_EVAL_EPISODES,
            eval_seed: DEFAULT_EVAL_SEED,
        })
    }

    /// Check the experiment definition and its hyperparameters.
    pub fn validate(&self) -> Result<(), AqilError> {
        if self.name.is_empty() {
            return Err(AqilError::Config("experiment name is empty".into()));
        }
        if self.phases.is_empty() {
            return Err(AqilError::Config(format!(
                "experiment {} has no phases",
                self.name
            )));
        }
        if self.phases.iter().any(|p| p.episodes == 0) {
            return Err(AqilError::Config(format!(
                "experiment {} has a zero-episode phase",
                self.name
            )));
        }
        if self.seeds.is_empty() {
            return Err(AqilError::Config(format!(
                "experiment {} has no seeds",
                self.name
            )));
        }
        if self.eval_episodes == 0 {
            return Err(AqilError::Config(format!(
                "experiment {} needs at least one evaluation episode",
                self.name
            )));
        }
        self.train.validate()?;
        Ok(())
    }
}

/// Load and parse a config file.
pub fn load_config(path: &Path) -> Result<Vec<ExperimentSpec>, AqilError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_config(&text, path)
}

/// Parse config text into experiment specs, one per `[section]`.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<ExperimentSpec>, AqilError> {
    /// A section being filled in: the experiment under construction,
    /// whether its name is reserved,
    /// the header's line number, and the keys seen so far.
    struct Section {
        spec: ExperimentSpec,
        reserved: bool,
        header_line: usize,
        seen: BTreeSet<String>,
    }

    fn close(
        origin: &Path,
        section: Section,
        specs: &mut Vec<ExperimentSpec>,
    ) -> Result<(), AqilError> {
        if section.spec.phases.is_empty() {
            return parse_fail_at(
                origin,
                section.header_line,
                format!(
                    "section {} is not a reserved name and declares no `phases`",
                    section.spec.name
                ),
            );
        }
        specs.push(section.spec);
        Ok(())
    }

    let mut specs: Vec<ExperimentSpec> = Vec::new();
    let mut current: Option<Section> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }

        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']').map(str::trim) else {
                return parse_fail_at(origin, line_no, "unterminated section header".into());
            };
            if name.is_empty() {
                return parse_fail_at(origin, line_no, "empty section name".into());
            }
            if let Some(section) = current.take() {
                close(origin, section, &mut specs)?;
            }
            let reserved = ExperimentSpec::named_phases(name).is_some();
            current = Some(Section {
                spec: ExperimentSpec {
                    name: name.to_owned(),
                    phases: ExperimentSpec::named_phases(name).unwrap_or_default(),
                    train: TrainConfig::default(),
                    seeds: DEFAULT_SEEDS.to_vec(),
                    eval_episodes: DEFAULT_EVAL_EPISODES,
                    eval_seed: DEFAULT_EVAL_SEED,
                },
                reserved,
                header_line: line_no,
                seen: BTreeSet::new(),
            });
            continue;
        }

        let Some((key, value)) = line.split_once('=') else {
            return parse_fail_at(
                origin,
                line_no,
                format!("expected `key = value`, got `{line}`"),
            );
        };
        let key = key.trim();
        let value = value.trim();
        let Some(section) = current.as_mut() else {
            return parse_fail_at(
                origin,
                line_no,
                format!("key `{key}` appears before any [section]"),
            );
        };
        if !section.seen.insert(key.to_owned()) {
            return parse_fail_at(
                origin,
                line_no,
                format!("duplicate key `{key}` in section {}", section.spec.name),
            );
        }
        apply_key(&mut section.spec, section.reserved, key, value)
            .or_else(|msg| parse_fail_at(origin, line_no, msg))?;
    }

    if let Some(section) = current.take() {
        close(origin, section, &mut specs)?;
    }

    if specs.is_empty() {
        return Err(AqilError::Config(format!(
            "{}: config defines no [section]",
            origin.display()
        )));
    }
    Ok(specs)
}

/// Apply one `key = value` pair to a spec under construction. Returns a
/// message (without location) on failure.
fn apply_key(
    spec: &mut ExperimentSpec,
    reserved: bool,
    key: &str,
    value: &str,
) -> Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
        value
            .parse::<T>()
            .map_err(|_| format!("cannot parse `{value}` as a value for `{key}`"))
    }
    fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, String> {
        value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|_| format!("cannot parse `{s}` in list `{key}`"))
            })
            .collect()
    }

    let t = &mut spec.train;
    match key {
        "phases" => {
            if reserved {
                return Err(format!(
                    "section {} is a reserved name with a fixed phase budget; \
                     use a custom section name to choose phases",
                    spec.name
                ));
            }
            spec.phases = parse_phases(value)?;
        }
        "seeds" => spec.seeds = list(key, value)?,
        "eval_episodes" => spec.eval_episodes = num(key, value)?,
        "eval_seed" => spec.eval_seed = num(key, value)?,

        "hidden" => t.hidden = list(key, value)?,
        "gamma" => t.gamma = num(key, value)?,
        "learning_rate" => t.learning_rate = num(key, value)?,
        "epsilon_start" => t.epsilon_start = num(key, value)?,
        "epsilon_min" => t.epsilon_min = num(key, value)?,
        "epsilon_decay" => t.epsilon_decay = num(key, value)?,
        "batch_size" => t.batch_size = num(key, value)?,
        "buffer_capacity" => t.buffer_capacity = num(key, value)?,
        "trajectories_per_epoch" => t.trajectories_per_epoch = num(key, value)?,
        "grad_clip" => {
            t.grad_clip = if value.eq_ignore_ascii_case("none") {
                None
            } else {
                Some(num(key, value)?)
            };
        }
        "target_sync" => {
            t.target_sync = if value.eq_ignore_ascii_case("episode") {
                TargetSync::EpisodeBoundary
            } else if let Some(n) = value.strip_prefix("steps:") {
                TargetSync::Steps(num(key, n.trim())?)
            } else {
                return Err(format!(
                    "`{key}` must be `episode` or `steps:N`, got `{value}`"
                ));
            };
        }

        "gravity" => t.physics.gravity = num(key, value)?,
        "cart_mass" => t.physics.cart_mass = num(key, value)?,
        "pole_mass" => t.physics.pole_mass = num(key, value)?,
        "pole_half_length" => t.physics.pole_half_length = num(key, value)?,
        "force_magnitude" => t.physics.force_magnitude = num(key, value)?,
        "tau" => t.physics.tau = num(key, value)?,
        "theta_limit_deg" => t.physics.theta_limit = num::<f64>(key, value)? / DEG_PER_RAD,
        "x_limit" => t.physics.x_limit = num(key, value)?,
        "max_episode_steps" => t.physics.max_episode_steps = num(key, value)?,

        "theta_optimal" => t.reward.theta_optimal = num(key, value)?,
        "sigma1" => t.reward.sigma1 = num(key, value)?,
        "sigma2" => t.reward.sigma2 = num(key, value)?,
        "w_angle" => t.reward.w_angle = num(key, value)?,
        "w_action" => t.reward.w_action = num(key, value)?,

        "pid_p" => t.pid.p = num(key, value)?,
        "pid_i" => t.pid.i = num(key, value)?,
        "pid_d" => t.pid.d = num(key, value)?,
        "fb_theta_dot" => t.feedback.theta_dot = num(key, value)?,
        "fb_x" => t.feedback.x = num(key, value)?,
        "fb_x_dot" => t.feedback.x_dot = num(key, value)?,

        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

/// Parse `imitation:250, reinforcement:250` into a phase list.
fn parse_phases(value: &str) -> Result<Vec<Phase>, String> {
    let mut phases = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((mode, count)) = part.split_once(':') else {
            return Err(format!(
                "phase `{part}` must look like `imitation:N` or `reinforcement:N`"
            ));
        };
        let mode = match mode.trim() {
            "imitation" => Mode::Imitation,
            "reinforcement" => Mode::Reinforcement,
            other => return Err(format!("unknown phase mode `{other}`")),
        };
        let episodes: u32 = count
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse episode count `{}`", count.trim()))?;
        phases.push(Phase { mode, episodes });
    }
    if phases.is_empty() {
        return Err("phase list is empty".into());
    }
    Ok(phases)
}
