//! The two Gaussian reward functions.
//!
//! During imitation the reward scores adherence to the expert: a small term
//! for keeping the pole near upright plus a large term for proposing the
//! same action the expert chose. During reinforcement only the angle term
//! remains, rescaled to a full Gaussian on its own. Angles enter in degrees;
//! with σ₁ = 10° the angle term is discriminative across the whole ±50°
//! live range, which it would not be in radians.

use crate::env::Action;

/// Shape parameters shared by both rewards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardParams {
    /// Target pole angle, degrees.
    pub theta_optimal: f64,
    /// Width of the angle Gaussian, degrees.
    pub sigma1: f64,
    /// Width of the action-difference Gaussian, in action-encoding units.
    pub sigma2: f64,
    /// Weight of the angle term in the imitation reward.
    pub w_angle: f64,
    /// Weight of the action-adherence term in the imitation reward.
    pub w_action: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            theta_optimal: 0.0,
            sigma1: 10.0,
            sigma2: 0.5,
            w_angle: 0.2,
            w_action: 0.8,
        }
    }
}

fn gaussian(z: f64) -> f64 {
    libm::exp(-0.5 * z * z)
}

/// Imitation-phase reward: angle quality plus expert adherence.
///
/// `R = w_angle·exp(−½((θ_opt−θ)/σ₁)²) + w_action·exp(−½((a_PID−a_model)/σ₂)²)`,
/// with the actions entering through their 0/1 encodings. Always in (0, 1];
/// 1.0 exactly when the pole is at the target angle and the actions match.
pub fn imitation_reward(
    theta_deg: f64,
    a_pid: Action,
    a_model: Action,
    params: &RewardParams,
) -> f64 {
    let z_angle = (params.theta_optimal - theta_deg) / params.sigma1;
    let z_action = (a_pid.encoded() - a_model.encoded()) / params.sigma2;
    params.w_angle * gaussian(z_angle) + params.w_action * gaussian(z_action)
}

/// Reinforcement-phase reward: the angle Gaussian alone.
///
/// `R = exp(−½((θ_opt−θ)/σ₁)²)`, in (0, 1], maximal at the target angle.
pub fn rl_reward(theta_deg: f64, params: &RewardParams) -> f64 {
    gaussian((params.theta_optimal - theta_deg) / params.sigma1)
}
