//! Episode-driven DQN training with two reward regimes on one persistent
//! network.
//!
//! In **imitation** mode each step queries both the agent's ε-greedy
//! proposal and the PID expert at the same state; the executed action is the
//! expert's, and the stored reward scores how well the agent's proposal
//! adhered to it. In **reinforcement** mode the agent drives the cart itself
//! and the reward is the environment's angle Gaussian. Phases run back to
//! back on one network and one replay buffer, so an imitation→reinforcement
//! schedule is exactly "keep the network, switch the reward source and the
//! behavior policy". The ε schedule restarts at each phase boundary: the
//! network arrives warm, but the reward landscape changes.
//!
//! Every stochastic choice draws from one ChaCha stream seeded by the
//! config, so a (config, phases) pair fully determines every logged number.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::buffer::{ReplayBuffer, Transition};
use crate::env::{Action, CartPole, CartState, EnvError, PhysicsParams};
use crate::expert::{Expert, FeedbackGains, PidGains};
use crate::qnet::{
    greedy_action, BellmanSample, GradientSet, QNetwork, QnetError, TargetNetwork, Workspace,
};
use crate::reward::{imitation_reward, rl_reward, RewardParams};
use crate::rng;

/// Which reward regime an episode runs under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Imitation,
    Reinforcement,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Imitation => "imitation",
            Mode::Reinforcement => "reinforcement",
        })
    }
}

/// When the frozen target network is refreshed from the online network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetSync {
    /// Refresh after every episode.
    EpisodeBoundary,
    /// Refresh every this-many gradient steps.
    Steps(u32),
}

/// One training phase: a mode and its epoch budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase {
    pub mode: Mode,
    pub episodes: u32,
}

impl Phase {
    pub fn imitation(episodes: u32) -> Phase {
        Phase {
            mode: Mode::Imitation,
            episodes,
        }
    }

    pub fn reinforcement(episodes: u32) -> Phase {
        Phase {
            mode: Mode::Reinforcement,
            episodes,
        }
    }
}

/// Every hyperparameter of a training run.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    /// Hidden layer widths of the Q-network.
    pub hidden: Vec<usize>,
    /// Discount factor of the Bellman target.
    pub gamma: f64,
    /// SGD step size.
    pub learning_rate: f64,
    /// ε-greedy schedule: start value, floor, and per-episode decay factor.
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub epsilon_decay: f64,
    /// Minibatch size; also the replay warmup threshold.
    pub batch_size: usize,
    /// Replay buffer capacity.
    pub buffer_capacity: usize,
    /// Global gradient-norm ceiling, or `None` to disable clipping.
    pub grad_clip: Option<f64>,
    /// Target-network refresh cadence.
    pub target_sync: TargetSync,
    /// Trajectories per epoch; at the default of 1, epochs and episodes
    /// coincide.
    pub trajectories_per_epoch: u32,
    pub physics: PhysicsParams,
    pub reward: RewardParams,
    pub pid: PidGains,
    pub feedback: FeedbackGains,
    /// Seed of the run's single random stream.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![24, 24],
            gamma: 0.95,
            learning_rate: 1e-3,
            epsilon_start: 1.0,
            epsilon_min: 0.01,
            epsilon_decay: 0.995,
            batch_size: 64,
            buffer_capacity: 100_000,
            grad_clip: Some(10.0),
            target_sync: TargetSync::EpisodeBoundary,
            trajectories_per_epoch: 1,
            physics: PhysicsParams::default(),
            reward: RewardParams::default(),
            pid: PidGains::default(),
            feedback: FeedbackGains::default(),
            seed: 1,
        }
    }
}

impl TrainConfig {
    /// Check every invariant the trainer assumes.
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |msg| Err(TrainError::InvalidConfig(msg));
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return fail("hidden layer widths must be non-empty and positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1]");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning rate must be positive and finite");
        }
        if !(0.0..=1.0).contains(&self.epsilon_min)
            || !(0.0..=1.0).contains(&self.epsilon_start)
            || self.epsilon_min > self.epsilon_start
        {
            return fail("epsilon schedule must satisfy 0 ≤ min ≤ start ≤ 1");
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return fail("epsilon decay must lie in (0, 1]");
        }
        if self.batch_size == 0 {
            return fail("batch size must be positive");
        }
        if self.buffer_capacity < self.batch_size {
            return fail("buffer capacity must be at least the batch size");
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0 && c.is_finite()) {
                return fail("gradient clip must be positive and finite");
            }
        }
        if let TargetSync::Steps(c) = self.target_sync {
            if c == 0 {
                return fail("target sync interval must be positive");
            }
        }
        if self.trajectories_per_epoch == 0 {
            return fail("trajectories per epoch must be positive");
        }
        if self.physics.max_episode_steps == 0 {
            return fail("episode step cap must be positive");
        }
        Ok(())
    }
}

/// Per-episode record: everything the experiment CSVs persist.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeLog {
    /// 1-based index across the whole run.
    pub episode: u32,
    pub phase: Mode,
    /// Steps survived.
    pub steps: u32,
    /// Sum of per-step training rewards.
    pub score: f64,
    /// Mean minibatch loss over the episode's gradient steps (0 while the
    /// replay buffer is still warming up).
    pub mean_loss: f64,
    /// The ε this episode was rolled with.
    pub epsilon: f64,
    /// Wall-clock duration (0 without the `std` feature).
    pub wall_time_s: f64,
}

/// Instrumentation totals over a run; the cheap way to assert the
/// behavior-policy and reward-source invariants in tests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    /// Steps on which the expert was consulted.
    pub expert_queries: u64,
    /// Steps whose executed action came from the expert (imitation mode).
    pub executed_expert_actions: u64,
    /// Steps whose executed action came from the agent (reinforcement mode).
    pub executed_agent_actions: u64,
    /// Rewards produced by the adherence (imitation) function.
    pub imitation_rewards: u64,
    /// Rewards produced by the environment (reinforcement) function.
    pub rl_rewards: u64,
    /// Imitation steps where the agent's proposal matched the expert.
    pub proposals_matching_expert: u64,
    /// Imitation rewards at or above the adherence weight (saturated
    /// action term).
    pub imitation_rewards_saturated: u64,
    /// Minibatch gradient steps taken.
    pub gradient_steps: u64,
    /// Target-network refreshes.
    pub target_syncs: u64,
}

/// Everything `train` hands back: the final network, the per-episode logs,
/// and the instrumentation counters.
#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub net: QNetwork,
    pub logs: Vec<EpisodeLog>,
    pub counters: Counters,
}

/// Training failures.
#[derive(Clone, Debug, PartialEq)]
pub enum TrainError {
    InvalidConfig(&'static str),
    EmptyPhases,
    ZeroEpisodePhase,
    Env(EnvError),
    Qnet(QnetError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            TrainError::EmptyPhases => f.write_str("phase list is empty"),
            TrainError::ZeroEpisodePhase => f.write_str("phase with zero episodes"),
            TrainError::Env(e) => write!(f, "environment failure: {e}"),
            TrainError::Qnet(e) => write!(f, "network failure: {e}"),
        }
    }
}

impl core::error::Error for TrainError {}

impl From<EnvError> for TrainError {
    fn from(e: EnvError) -> Self {
        TrainError::Env(e)
    }
}

impl From<QnetError> for TrainError {
    fn from(e: QnetError) -> Self {
        TrainError::Qnet(e)
    }
}

/// ε-greedy action choice: with probability ε a fair coin between the two
/// pushes, otherwise the argmax Q-value with ties toward `PushLeft`.
/// Convenience path that allocates scratch; hot loops use
/// [`select_action_ws`].
pub fn select_action<R: RngCore + ?Sized>(
    net: &QNetwork,
    state: &CartState,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    let mut ws = Workspace::for_net(net, 1);
    select_action_ws(net, state, epsilon, rng, &mut ws)
}

/// [`select_action`] with caller-owned scratch.
pub fn select_action_ws<R: RngCore + ?Sized>(
    net: &QNetwork,
    state: &CartState,
    epsilon: f64,
    rng: &mut R,
    ws: &mut Workspace,
) -> Action {
    if rng::u01(rng) < epsilon {
        if rng::u01(rng) < 0.5 {
            Action::PushLeft
        } else {
            Action::PushRight
        }
    } else {
        greedy_action(net.q_values(state, ws))
    }
}

/// Run the phase schedule on one persistent network and replay buffer.
///
/// Returns the final network, one log per episode (phase order preserved),
/// and the instrumentation counters.
pub fn train(config: &TrainConfig, phases: &[Phase]) -> Result<TrainOutput, TrainError> {
    config.validate()?;
    if phases.is_empty() {
        return Err(TrainError::EmptyPhases);
    }
    if phases.iter().any(|p| p.episodes == 0) {
        return Err(TrainError::ZeroEpisodePhase);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let net = QNetwork::init(&config.hidden, &mut rng)?;
    let target = net.sync_target();
    let mut runner = Runner {
        ws: Workspace::for_net(&net, config.batch_size),
        grads: GradientSet::zeros_like(&net),
        net,
        target,
        buffer: ReplayBuffer::new(config.buffer_capacity),
        env: CartPole::new(config.physics),
        expert: Expert::new(config.pid, config.feedback),
        rng,
        indices: Vec::with_capacity(config.batch_size),
        next_states: Vec::with_capacity(config.batch_size),
        max_q: Vec::with_capacity(config.batch_size),
        batch: Vec::with_capacity(config.batch_size),
        counters: Counters::default(),
        config,
    };

    let total: u64 = phases
        .iter()
        .map(|p| u64::from(p.episodes) * u64::from(config.trajectories_per_epoch))
        .sum();
    let mut logs = Vec::with_capacity(total.min(1 << 20) as usize);
    let mut episode_index = 0u32;

    for phase in phases {
        let mut epsilon = config.epsilon_start;
        for _ in 0..phase.episodes {
            for _ in 0..config.trajectories_per_epoch {
                episode_index += 1;
                let log = runner.run_episode(phase.mode, epsilon, episode_index)?;
                logs.push(log);
                if runner.config.target_sync == TargetSync::EpisodeBoundary {
                    runner.target = runner.net.sync_target();
                    runner.counters.target_syncs += 1;
                }
                epsilon = (epsilon * config.epsilon_decay).max(config.epsilon_min);
            }
        }
    }

    Ok(TrainOutput {
        net: runner.net,
        logs,
        counters: runner.counters,
    })
}

/// Mutable state of one training run.
struct Runner<'a> {
    config: &'a TrainConfig,
    net: QNetwork,
    target: TargetNetwork,
    buffer: ReplayBuffer,
    env: CartPole,
    expert: Expert,
    grads: GradientSet,
    ws: Workspace,
    rng: ChaCha8Rng,
    indices: Vec<usize>,
    next_states: Vec<CartState>,
    max_q: Vec<f64>,
    batch: Vec<BellmanSample>,
    counters: Counters,
}

impl Runner<'_> {
    fn run_episode(
        &mut self,
        mode: Mode,
        epsilon: f64,
        episode_index: u32,
    ) -> Result<EpisodeLog, TrainError> {
        #[cfg(feature = "std")]
        let t_start = std::time::Instant::now();

        let mut state = self.env.reset(&mut self.rng);
        self.expert.reset();
        let mut score = 0.0f64;
        let mut loss_sum = 0.0f64;
        let mut loss_count = 0u64;
        let mut steps = 0u32;

        loop {
            let a_model = select_action_ws(&self.net, &state, epsilon, &mut self.rng, &mut self.ws);
            let (executed, reward) = match mode {
                Mode::Imitation => {
                    let a_pid = self.expert.act(&state);
                    self.counters.expert_queries += 1;
                    self.counters.executed_expert_actions += 1;
                    self.counters.imitation_rewards += 1;
                    if a_model == a_pid {
                        self.counters.proposals_matching_expert += 1;
                    }
                    let r =
                        imitation_reward(state.theta_deg(), a_pid, a_model, &self.config.reward);
                    if r >= self.config.reward.w_action {
                        self.counters.imitation_rewards_saturated += 1;
                    }
                    (a_pid, r)
                }
                Mode::Reinforcement => {
                    self.counters.executed_agent_actions += 1;
                    self.counters.rl_rewards += 1;
                    (a_model, rl_reward(state.theta_deg(), &self.config.reward))
                }
            };

            let out = self.env.step(executed)?;
            self.buffer.push(Transition {
                state,
                action: executed,
                reward,
                next_state: out.next_state,
                terminal: out.terminal,
            });
            score += reward;
            steps += 1;

            if self.buffer.len() >= self.config.batch_size {
                loss_sum += self.gradient_step();
                loss_count += 1;
                if let TargetSync::Steps(c) = self.config.target_sync {
                    if self.counters.gradient_steps.is_multiple_of(u64::from(c)) {
                        self.target = self.net.sync_target();
                        self.counters.target_syncs += 1;
                    }
                }
            }

            state = out.next_state;
            if out.terminal {
                break;
            }
        }

        #[cfg(feature = "std")]
        let wall_time_s = t_start.elapsed().as_secs_f64();
        #[cfg(not(feature = "std"))]
        let wall_time_s = 0.0;

        Ok(EpisodeLog {
            episode: episode_index,
            phase: mode,
            steps,
            score,
            mean_loss: if loss_count > 0 {
                loss_sum / loss_count as f64
            } else {
                0.0
            },
            epsilon,
            wall_time_s,
        })
    }

    /// One minibatch update: sample uniformly with replacement, bootstrap
    /// targets under the frozen network, backpropagate, clip, descend.
    fn gradient_step(&mut self) -> f64 {
        let bs = self.config.batch_size;
        self.buffer
            .sample_indices(bs, &mut self.rng, &mut self.indices);

        self.next_states.clear();
        for &i in &self.indices {
            self.next_states.push(self.buffer.get(i).next_state);
        }
        self.target
            .batch_max_q(&self.next_states, &mut self.ws, &mut self.max_q);

        self.batch.clear();
        for (pos, &i) in self.indices.iter().enumerate() {
            let t = self.buffer.get(i);
            let target = if t.terminal {
                t.reward
            } else {
                t.reward + self.config.gamma * self.max_q[pos]
            };
            self.batch.push(BellmanSample {
                state: t.state,
                action: t.action,
                target,
            });
        }

        let loss = self
            .net
            .loss_and_gradients(&self.batch, &mut self.grads, &mut self.ws);
        if let Some(max_norm) = self.config.grad_clip {
            self.grads.clip_norm(max_norm);
        }
        self.net.sgd_step(&self.grads, self.config.learning_rate);
        self.counters.gradient_steps += 1;
        loss
    }
}


#[cfg(test)]
mod bench {
    use super::*;

    /// Not a correctness test: prints the per-gradient-step cost that the
    /// experiment-scale budgets rest on. Run with
    /// `cargo test -p aqil-core -- --ignored bench --nocapture`.
    #[test]
    #[ignore]
    fn bench_gradient_step_cost() {
        let config = TrainConfig {
            physics: PhysicsParams {
                max_episode_steps: 2_000,
                ..PhysicsParams::default()
            },
            ..TrainConfig::default()
        };
        let t0 = std::time::Instant::now();
        let out = train(&config, &[Phase::imitation(10)]).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        let steps = out.counters.gradient_steps;
        std::println!(
            "{} gradient steps in {:.3}s → {:.2} µs/step",
            steps,
            dt,
            dt / steps as f64 * 1e6
        );
    }
}
