//! Deterministic CartPole physics with a widened pole-angle limit.
//!
//! The dynamics are the classic cart-pole equations of motion integrated
//! with explicit Euler: positions advance with the *old* velocities, then
//! velocities advance with the freshly computed accelerations. An episode
//! terminates when the pole leans past the angle limit (default 50°), the
//! cart leaves ±2.4 m, or a step cap is reached.

use core::fmt;

use rand_core::RngCore;

use crate::rng;

/// Degrees per radian; controllers and rewards work on the pole angle in
/// degrees while the dynamics integrate radians.
pub const DEG_PER_RAD: f64 = 180.0 / core::f64::consts::PI;

/// One of the two discrete pushes the agent can apply to the cart.
///
/// The numeric encoding (0 for left, 1 for right) is part of the contract:
/// it is the value that enters the imitation reward's action difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    PushLeft,
    PushRight,
}

impl Action {
    /// All actions, in encoding order.
    pub const ALL: [Action; 2] = [Action::PushLeft, Action::PushRight];

    /// Numeric encoding: `PushLeft` → 0, `PushRight` → 1.
    pub fn index(self) -> usize {
        match self {
            Action::PushLeft => 0,
            Action::PushRight => 1,
        }
    }

    /// The encoding as a real number, for reward arithmetic.
    pub fn encoded(self) -> f64 {
        self.index() as f64
    }

    /// Inverse of [`Action::index`].
    ///
    /// # Panics
    /// Panics if `index` is not 0 or 1.
    pub fn from_index(index: usize) -> Action {
        match index {
            0 => Action::PushLeft,
            1 => Action::PushRight,
            _ => panic!("action index out of range: {index}"),
        }
    }

    /// The opposite push.
    pub fn flipped(self) -> Action {
        match self {
            Action::PushLeft => Action::PushRight,
            Action::PushRight => Action::PushLeft,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::PushLeft => "left",
            Action::PushRight => "right",
        })
    }
}

/// The full physical state: cart position and velocity, pole angle and
/// angular velocity. Angles are radians; 0 is upright and positive leans
/// right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartState {
    pub const ZERO: CartState = CartState {
        x: 0.0,
        x_dot: 0.0,
        theta: 0.0,
        theta_dot: 0.0,
    };

    /// Pole angle in degrees, the unit the rewards and the PID expert use.
    pub fn theta_deg(&self) -> f64 {
        self.theta * DEG_PER_RAD
    }

    /// Pole angular velocity in degrees per second.
    pub fn theta_dot_deg(&self) -> f64 {
        self.theta_dot * DEG_PER_RAD
    }

    /// True when every component is a finite number.
    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.x_dot.is_finite()
            && self.theta.is_finite()
            && self.theta_dot.is_finite()
    }

    /// The state as a fixed-size input vector for the Q-network.
    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

/// Physical constants and episode limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicsParams {
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Cart mass, kg.
    pub cart_mass: f64,
    /// Pole mass, kg.
    pub pole_mass: f64,
    /// Half the pole length, m (the equations act on the half-length).
    pub pole_half_length: f64,
    /// Magnitude of the push force, N.
    pub force_magnitude: f64,
    /// Integration time step, s.
    pub tau: f64,
    /// Pole-angle termination limit, radians.
    pub theta_limit: f64,
    /// Cart-position termination limit, m.
    pub x_limit: f64,
    /// Hard cap on episode length; reaching it ends the episode.
    pub max_episode_steps: u32,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        PhysicsParams {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_half_length: 0.5,
            force_magnitude: 10.0,
            tau: 0.02,
            theta_limit: 50.0 / DEG_PER_RAD,
            x_limit: 2.4,
            max_episode_steps: 50_000,
        }
    }
}

impl PhysicsParams {
    /// Combined cart + pole mass.
    pub fn total_mass(&self) -> f64 {
        self.cart_mass + self.pole_mass
    }
}

/// Result of advancing the environment by one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub next_state: CartState,
    pub terminal: bool,
    /// Steps taken since the last reset, including this one.
    pub steps_elapsed: u32,
}

/// Raised when the state handed to the integrator has stopped being a real
/// number — the upstream signal of numerical blow-up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvError {
    NonFiniteState,
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::NonFiniteState => f.write_str("environment state is not finite"),
        }
    }
}

impl core::error::Error for EnvError {}

/// Advance one state by one time step under the given action, ignoring
/// termination rules. Pure function of its inputs.
pub fn transition(params: &PhysicsParams, state: CartState, action: Action) -> CartState {
    let force = match action {
        Action::PushLeft => -params.force_magnitude,
        Action::PushRight => params.force_magnitude,
    };
    let cos_theta = libm::cos(state.theta);
    let sin_theta = libm::sin(state.theta);
    let total_mass = params.total_mass();
    let pole_mass_length = params.pole_mass * params.pole_half_length;

    let temp =
        (force + pole_mass_length * state.theta_dot * state.theta_dot * sin_theta) / total_mass;
    let theta_acc = (params.gravity * sin_theta - cos_theta * temp)
        / (params.pole_half_length
            * (4.0 / 3.0 - params.pole_mass * cos_theta * cos_theta / total_mass));
    let x_acc = temp - pole_mass_length * theta_acc * cos_theta / total_mass;

    CartState {
        x: state.x + params.tau * state.x_dot,
        x_dot: state.x_dot + params.tau * x_acc,
        theta: state.theta + params.tau * state.theta_dot,
        theta_dot: state.theta_dot + params.tau * theta_acc,
    }
}

/// A CartPole episode: owns the current state and the step counter.
#[derive(Clone, Debug)]
pub struct CartPole {
    params: PhysicsParams,
    state: CartState,
    steps: u32,
}

impl CartPole {
    pub fn new(params: PhysicsParams) -> Self {
        CartPole {
            params,
            state: CartState::ZERO,
            steps: 0,
        }
    }

    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }

    pub fn state(&self) -> CartState {
        self.state
    }

    pub fn steps_elapsed(&self) -> u32 {
        self.steps
    }

    /// Overwrite the current state (scripted tests and probes).
    pub fn set_state(&mut self, state: CartState) {
        self.state = state;
    }

    /// Start a new episode: every state component is drawn uniformly from
    /// [−0.05, 0.05] and the step counter is zeroed.
    pub fn reset<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> CartState {
        self.state = CartState {
            x: rng::uniform_in(rng, -0.05, 0.05),
            x_dot: rng::uniform_in(rng, -0.05, 0.05),
            theta: rng::uniform_in(rng, -0.05, 0.05),
            theta_dot: rng::uniform_in(rng, -0.05, 0.05),
        };
        self.steps = 0;
        self.state
    }

    /// Apply one push and integrate one time step.
    ///
    /// The outcome is terminal when the new state breaks the angle or
    /// position limit, or when the step cap is reached.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        if !self.state.is_finite() {
            return Err(EnvError::NonFiniteState);
        }
        let next = transition(&self.params, self.state, action);
        self.state = next;
        self.steps += 1;

        let terminal = libm::fabs(next.theta) > self.params.theta_limit
            || libm::fabs(next.x) > self.params.x_limit
            || self.steps >= self.params.max_episode_steps;

        Ok(StepOutcome {
            next_state: next,
            terminal,
            steps_elapsed: self.steps,
        })
    }
}
