//! Policy evaluation: greedy rollouts scored by the environment reward.
//!
//! Evaluation is read-only — no exploration, no learning, no replay — so the
//! numbers it produces are a property of the policy alone. Scores sum the
//! angle Gaussian over the episode, which makes them comparable across
//! training regimes that trained on different reward functions.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::env::{Action, CartPole, CartState, EnvError, PhysicsParams};
use crate::expert::Expert;
use crate::qnet::{greedy_action, QNetwork, Workspace};
use crate::reward::{rl_reward, RewardParams};

/// Anything that can drive the cart during evaluation.
pub trait Policy {
    /// Reset per-episode internal state (controller memory and the like).
    fn begin_episode(&mut self) {}
    /// Choose the action for `state`.
    fn act(&mut self, state: &CartState) -> Action;
}

/// A frozen Q-network acting by argmax. Borrows the network immutably, so
/// the type system itself guarantees evaluation cannot change the weights.
pub struct GreedyPolicy<'a> {
    net: &'a QNetwork,
    ws: Workspace,
}

impl<'a> GreedyPolicy<'a> {
    pub fn new(net: &'a QNetwork) -> Self {
        GreedyPolicy {
            ws: Workspace::for_net(net, 1),
            net,
        }
    }
}

impl Policy for GreedyPolicy<'_> {
    fn act(&mut self, state: &CartState) -> Action {
        greedy_action(self.net.q_values(state, &mut self.ws))
    }
}

impl Policy for Expert {
    fn begin_episode(&mut self) {
        self.reset();
    }

    fn act(&mut self, state: &CartState) -> Action {
        Expert::act(self, state)
    }
}

/// Results of an evaluation batch.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Per-episode scores (sum of the environment reward).
    pub scores: Vec<f64>,
    /// Per-episode survival steps.
    pub steps: Vec<u32>,
    /// Mean score across episodes.
    pub mean_score: f64,
    /// Best single-episode score.
    pub best_score: f64,
    /// Mean steps survived.
    pub mean_steps: f64,
}

/// Roll a policy for `episodes` episodes from seeded random starts and
/// score each step with the environment reward at the pre-step angle.
///
/// The start-state stream is fully determined by `seed`, so two policies
/// evaluated with the same seed face identical initial conditions.
pub fn evaluate_policy<P: Policy + ?Sized>(
    policy: &mut P,
    physics: &PhysicsParams,
    reward: &RewardParams,
    episodes: u32,
    seed: u64,
) -> Result<EvalReport, EnvError> {
    assert!(episodes > 0, "evaluation needs at least one episode");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = CartPole::new(*physics);
    let mut scores = Vec::with_capacity(episodes as usize);
    let mut steps_v = Vec::with_capacity(episodes as usize);

    for _ in 0..episodes {
        let mut state = env.reset(&mut rng);
        policy.begin_episode();
        let mut score = 0.0f64;
        let mut steps = 0u32;
        loop {
            let action = policy.act(&state);
            score += rl_reward(state.theta_deg(), reward);
            let out = env.step(action)?;
            steps += 1;
            state = out.next_state;
            if out.terminal {
                break;
            }
        }
        scores.push(score);
        steps_v.push(steps);
    }

    let n = scores.len() as f64;
    let mean_score = scores.iter().sum::<f64>() / n;
    let best_score = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_steps = steps_v.iter().map(|&s| f64::from(s)).sum::<f64>() / n;
    Ok(EvalReport {
        scores,
        steps: steps_v,
        mean_score,
        best_score,
        mean_steps,
    })
}
