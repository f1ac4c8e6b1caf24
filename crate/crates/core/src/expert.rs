//! The PID expert controller — the demonstrator the imitation phase learns
//! from.
//!
//! The PID core acts on the pole angle in degrees with per-step integral and
//! derivative terms. On its own that signal balances the pole only briefly:
//! the discrete derivative supplies too little phase lead to damp the
//! growing lean oscillation, and no function of the angle alone can regulate
//! cart drift (the angle dynamics are independent of `x` and `ẋ`). The
//! [`Expert`] therefore adds a small linear state-feedback term on top of
//! the PID output; with the default gains it balances for as long as the
//! episode cap allows on every seed we have tried.

use crate::env::{Action, CartState};

/// Proportional, integral, and derivative gains over degree-valued error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PidGains {
    pub p: f64,
    pub i: f64,
    pub d: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains {
            p: 0.6,
            i: 0.00625,
            d: 0.8,
        }
    }
}

/// PID memory: accumulated error and the previous error, both in degrees.
/// Reset to zero at every episode start.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PidState {
    pub accumulator: f64,
    pub prev_error: f64,
}

impl PidState {
    pub fn new() -> Self {
        PidState::default()
    }

    /// Clear the memory for a fresh episode.
    pub fn reset(&mut self) {
        *self = PidState::default();
    }
}

/// One PID update: returns the raw control signal `u` for the current error
/// and advances the controller memory.
///
/// The error is the pole angle in degrees (target is upright, 0°):
/// `u = p·e + i·(accumulator + e) + d·(e − prev_error)`.
pub fn pid_control(theta_deg: f64, state: &mut PidState, gains: &PidGains) -> f64 {
    let e = theta_deg;
    let u = gains.p * e + gains.i * (state.accumulator + e) + gains.d * (e - state.prev_error);
    state.accumulator += e;
    state.prev_error = e;
    u
}

/// Discrete PID action: push right when the control signal is ≥ 0 (the tie
/// at exactly zero resolves to `PushRight`), left otherwise.
pub fn pid_act(theta_deg: f64, state: &mut PidState, gains: &PidGains) -> Action {
    if pid_control(theta_deg, state, gains) >= 0.0 {
        Action::PushRight
    } else {
        Action::PushLeft
    }
}

/// Linear state-feedback gains added to the PID signal by the [`Expert`].
///
/// `theta_dot` multiplies the pole angular velocity in degrees/s (extra
/// phase lead); `x` and `x_dot` multiply the cart position and velocity
/// (drift regulation the angle terms cannot provide).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeedbackGains {
    pub theta_dot: f64,
    pub x: f64,
    pub x_dot: f64,
}

impl Default for FeedbackGains {
    fn default() -> Self {
        FeedbackGains {
            theta_dot: 0.8,
            x: 2.0,
            x_dot: 8.0,
        }
    }
}

/// The expert policy: a PID loop on the pole angle plus stabilizing linear
/// feedback on the remaining state, discretized to the two pushes.
#[derive(Clone, Debug)]
pub struct Expert {
    gains: PidGains,
    feedback: FeedbackGains,
    pid: PidState,
}

impl Expert {
    pub fn new(gains: PidGains, feedback: FeedbackGains) -> Self {
        Expert {
            gains,
            feedback,
            pid: PidState::new(),
        }
    }

    pub fn gains(&self) -> &PidGains {
        &self.gains
    }

    pub fn feedback(&self) -> &FeedbackGains {
        &self.feedback
    }

    /// Clear the PID memory for a fresh episode.
    pub fn reset(&mut self) {
        self.pid.reset();
    }

    /// The raw combined control signal at `state`, advancing the PID memory.
    pub fn control(&mut self, state: &CartState) -> f64 {
        pid_control(state.theta_deg(), &mut self.pid, &self.gains)
            + self.feedback.theta_dot * state.theta_dot_deg()
            + self.feedback.x * state.x
            + self.feedback.x_dot * state.x_dot
    }

    /// The expert's push at `state`: right when the control signal is ≥ 0.
    pub fn act(&mut self, state: &CartState) -> Action {
        if self.control(state) >= 0.0 {
            Action::PushRight
        } else {
            Action::PushLeft
        }
    }
}

impl Default for Expert {
    fn default() -> Self {
        Expert::new(PidGains::default(), FeedbackGains::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_error_from_reset_ties_to_push_right() {
        let mut st = PidState::new();
        assert_eq!(
            pid_act(0.0, &mut st, &PidGains::default()),
            Action::PushRight
        );
    }

    #[test]
    fn third_call_on_a_ramp_matches_the_hand_evaluated_signal() {
        let gains = PidGains::default();
        let mut st = PidState::new();
        pid_control(0.0, &mut st, &gains);
        pid_control(1.0, &mut st, &gains);
        let u = pid_control(2.0, &mut st, &gains);
        // 0.6·2 + 0.00625·(0 + 1 + 2) + 0.8·(2 − 1)
        assert!((u - 2.01875).abs() < 1e-15);
    }

    #[test]
    fn negated_ramp_flips_the_action() {
        let gains = PidGains::default();
        let mut st = PidState::new();
        pid_act(0.0, &mut st, &gains);
        pid_act(-1.0, &mut st, &gains);
        let mut probe = st;
        let u = pid_control(-2.0, &mut probe, &gains);
        assert!((u + 2.01875).abs() < 1e-15);
        assert_eq!(pid_act(-2.0, &mut st, &gains), Action::PushLeft);
    }

    #[test]
    fn reset_is_idempotent_and_clears_the_derivative_memory() {
        let gains = PidGains::default();
        let mut st = PidState::new();
        pid_control(5.0, &mut st, &gains);
        st.reset();
        assert_eq!(st, PidState::new());
        st.reset();
        assert_eq!(st, PidState::new());
        // After reset the derivative term sees prev_error = 0.
        let u = pid_control(1.0, &mut st, &gains);
        assert!((u - (0.6 + 0.00625 + 0.8)).abs() < 1e-15);
    }

    #[test]
    fn expert_at_the_origin_ties_to_push_right() {
        let mut expert = Expert::default();
        assert_eq!(expert.act(&CartState::ZERO), Action::PushRight);
    }

    #[test]
    fn expert_feedback_terms_enter_the_signal() {
        let mut expert = Expert::default();
        let lean_right = CartState {
            theta: 0.1,
            ..CartState::ZERO
        };
        expert.reset();
        assert_eq!(expert.act(&lean_right), Action::PushRight);

        let drifting_left = CartState {
            x: -1.0,
            x_dot: -1.0,
            ..CartState::ZERO
        };
        expert.reset();
        assert_eq!(expert.act(&drifting_left), Action::PushLeft);
    }

    proptest! {
        #[test]
        fn pid_sign_antisymmetry_over_histories(
            errors in proptest::collection::vec(-50.0f64..50.0, 1..20),
        ) {
            let gains = PidGains::default();
            let mut pos = PidState::new();
            let mut neg = PidState::new();
            for &e in &errors {
                let u_pos = pid_control(e, &mut pos, &gains);
                let u_neg = pid_control(-e, &mut neg, &gains);
                prop_assert!((u_pos + u_neg).abs() < 1e-12);
            }
        }

        #[test]
        fn expert_sign_antisymmetry_away_from_ties(
            x in -2.0f64..2.0,
            x_dot in -3.0f64..3.0,
            theta in -0.8f64..0.8,
            theta_dot in -3.0f64..3.0,
        ) {
            let state = CartState { x, x_dot, theta, theta_dot };
            let negated = CartState { x: -x, x_dot: -x_dot, theta: -theta, theta_dot: -theta_dot };
            let mut a = Expert::default();
            let mut b = Expert::default();
            let u = a.control(&state);
            let v = b.control(&negated);
            prop_assert!((u + v).abs() < 1e-12);
            if u.abs() > 1e-9 {
                let mut a = Expert::default();
                let mut b = Expert::default();
                prop_assert_eq!(a.act(&state), b.act(&negated).flipped());
            }
        }
    }
}
