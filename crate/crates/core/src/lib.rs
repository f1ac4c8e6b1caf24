//! Core algorithms for an augmented Q-imitation-learning laboratory on
//! CartPole: deterministic physics with a 50° pole-angle limit, a PID expert
//! controller, Gaussian reward shaping, a from-scratch fully connected
//! Q-network with its own backpropagation, and an episode-driven DQN trainer
//! that can run imitation phases (reward = adherence to the expert) and
//! reinforcement phases (reward = environment angle quality) back to back on
//! one persistent network.
//!
//! The crate is `no_std` + `alloc`; the `std` feature only adds wall-clock
//! timing to episode logs. All randomness flows through caller-supplied
//! [`rand_core::RngCore`] streams, so every run is bitwise reproducible from
//! its seed.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod buffer;
pub mod env;
pub mod eval;
pub mod expert;
pub mod qnet;
pub mod reward;
pub mod rng;
pub mod trainer;

pub use buffer::{ReplayBuffer, Transition};
pub use env::{
    transition, Action, CartPole, CartState, EnvError, PhysicsParams, StepOutcome, DEG_PER_RAD,
};
pub use eval::{evaluate_policy, EvalReport, GreedyPolicy, Policy};
pub use expert::{pid_act, pid_control, Expert, FeedbackGains, PidGains, PidState};
pub use qnet::{
    bellman_target, greedy_action, Activation, BellmanSample, GradientSet, QNetwork, QnetError,
    TargetNetwork, WeightKind, WeightRecord, Workspace,
};
pub use reward::{imitation_reward, rl_reward, RewardParams};
pub use trainer::{
    select_action, select_action_ws, train, Counters, EpisodeLog, Mode, Phase, TargetSync,
    TrainConfig, TrainError, TrainOutput,
};
