//! Acceptance gate for the whole laboratory.
//!
//! Each test pins one externally checkable property of the stack — reward
//! closed forms, physics against an independent transcription, analytic
//! gradients against finite differences, exact Bellman targets, expert
//! competence, the desk-scale training comparison, the regret report, and
//! bitwise determinism — with its tolerance stated next to the assertion.
//! The desk-scale comparison trains three schedules (imitation→reinforcement,
//! reinforcement only, imitation only) over five seeds and is shared between
//! the ordering and regret tests through a one-shot fixture.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use aqil::{
    experiment_policy_value, expert_policy_value, regret_reports, run_experiment, ExperimentResult,
    ExperimentSpec, DEFAULT_EVAL_EPISODES, DEFAULT_EVAL_SEED, EXPERT_POLICY_NAME,
};
use aqil_core::{
    bellman_target, evaluate_policy, imitation_reward, rl_reward, transition, Action,
    BellmanSample, CartState, Expert, GradientSet, Phase, PhysicsParams, QNetwork, RewardParams,
    TrainConfig, Workspace,
};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Absolute tolerance for the reward closed forms.
const REWARD_TOL: f64 = 1e-9;
/// Absolute tolerance for the published rest-state physics step.
const ORACLE_TOL: f64 = 1e-6;
/// Absolute tolerance against the independent dynamics transcription.
const TRANSCRIPTION_TOL: f64 = 1e-12;
/// Relative tolerance for analytic vs numeric gradients.
const GRAD_REL_TOL: f64 = 1e-4;
/// Central-difference step for the gradient check.
const FD_STEP: f64 = 1e-5;
/// Floor on the gradient-check denominator so near-zero pairs stay stable.
const GRAD_DENOM_FLOOR: f64 = 1e-6;
/// Required margin of the augmented median over the RL-only median.
const RL_MARGIN: f64 = 1.5;

// ---------------------------------------------------------------------------
// 1. Reward closed forms.
// ---------------------------------------------------------------------------

#[test]
fn reward_closed_forms_match_their_exact_values() {
    let p = RewardParams::default();

    let matched = imitation_reward(0.0, Action::PushLeft, Action::PushLeft, &p);
    assert!(
        (matched - 1.0).abs() <= REWARD_TOL,
        "upright + matching action must score 1.0, got {matched:.12}"
    );

    let expected_mismatch = 0.2 + 0.8 * (-2.0f64).exp();
    for (a_pid, a_model) in [
        (Action::PushLeft, Action::PushRight),
        (Action::PushRight, Action::PushLeft),
    ] {
        let mismatched = imitation_reward(0.0, a_pid, a_model, &p);
        assert!(
            (mismatched - expected_mismatch).abs() <= REWARD_TOL,
            "upright + opposite action must score 0.2 + 0.8e^-2 = {expected_mismatch:.12}, \
             got {mismatched:.12}"
        );
    }

    let ten_degrees = rl_reward(10.0, &p);
    let expected_rl = (-0.5f64).exp();
    assert!(
        (ten_degrees - expected_rl).abs() <= REWARD_TOL,
        "10° must score e^-1/2 = {expected_rl:.12}, got {ten_degrees:.12}"
    );
}

// ---------------------------------------------------------------------------
// 2. Physics against the rest-state oracle and an independent transcription.
// ---------------------------------------------------------------------------

/// Independent restatement of the cart-pole dynamics: classic force-balance
/// equations integrated by one explicit Euler step, written with `std` math
/// rather than the library's own code paths.
fn reference_step(p: &PhysicsParams, s: CartState, action: Action) -> [f64; 4] {
    let force = match action {
        Action::PushLeft => -p.force_magnitude,
        Action::PushRight => p.force_magnitude,
    };
    let sin_t = s.theta.sin();
    let cos_t = s.theta.cos();
    let total_mass = p.cart_mass + p.pole_mass;
    let temp =
        (force + p.pole_mass * p.pole_half_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
    let theta_acc = (p.gravity * sin_t - cos_t * temp)
        / (p.pole_half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
    let x_acc = temp - p.pole_mass * p.pole_half_length * theta_acc * cos_t / total_mass;
    [
        s.x + p.tau * s.x_dot,
        s.x_dot + p.tau * x_acc,
        s.theta + p.tau * s.theta_dot,
        s.theta_dot + p.tau * theta_acc,
    ]
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + u * (hi - lo)
}

#[test]
fn physics_step_matches_oracle_and_independent_transcription() {
    let p = PhysicsParams::default();

    // Push right from rest: only the velocities move on the first step.
    let next = transition(&p, CartState::ZERO, Action::PushRight);
    let oracle = [0.0, 0.195122, 0.0, -0.292683];
    for (got, want) in [next.x, next.x_dot, next.theta, next.theta_dot]
        .iter()
        .zip(oracle)
    {
        assert!(
            (got - want).abs() <= ORACLE_TOL,
            "rest-state step component {got:.9} differs from oracle {want:.9}"
        );
    }

    // 100 random in-bounds states, both actions, against the independent
    // transcription.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let state = CartState {
            x: uniform(&mut rng, -2.4, 2.4),
            x_dot: uniform(&mut rng, -3.0, 3.0),
            theta: uniform(&mut rng, -0.87, 0.87),
            theta_dot: uniform(&mut rng, -3.0, 3.0),
        };
        for action in [Action::PushLeft, Action::PushRight] {
            let got = transition(&p, state, action);
            let want = reference_step(&p, state, action);
            for (g, w) in [got.x, got.x_dot, got.theta, got.theta_dot]
                .iter()
                .zip(want)
            {
                assert!(
                    (g - w).abs() <= TRANSCRIPTION_TOL,
                    "transition({state:?}, {action:?}) component {g:.17} deviates from \
                     independent value {w:.17}"
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 3. Analytic gradients against central finite differences.
// ---------------------------------------------------------------------------

#[test]
fn analytic_gradients_match_central_finite_differences() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut net = QNetwork::init(&[8], &mut rng).expect("4-8-2 network");
    let mut grads = GradientSet::zeros_like(&net);
    let batch_size = 16;
    let mut ws = Workspace::for_net(&net, batch_size);

    for batch_idx in 0..20 {
        let batch: Vec<BellmanSample> = (0..batch_size)
            .map(|_| BellmanSample {
                state: CartState {
                    x: uniform(&mut rng, -2.4, 2.4),
                    x_dot: uniform(&mut rng, -3.0, 3.0),
                    theta: uniform(&mut rng, -0.87, 0.87),
                    theta_dot: uniform(&mut rng, -3.0, 3.0),
                },
                action: if uniform(&mut rng, 0.0, 1.0) < 0.5 {
                    Action::PushLeft
                } else {
                    Action::PushRight
                },
                target: uniform(&mut rng, -2.0, 2.0),
            })
            .collect();

        net.loss_and_gradients(&batch, &mut grads, &mut ws);

        for i in 0..net.param_count() {
            let original = net.get_param(i);
            net.set_param(i, original + FD_STEP);
            let plus = net.loss(&batch);
            net.set_param(i, original - FD_STEP);
            let minus = net.loss(&batch);
            net.set_param(i, original);

            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let analytic = grads.get(i);
            let rel =
                (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(GRAD_DENOM_FLOOR);
            assert!(
                rel < GRAD_REL_TOL,
                "batch {batch_idx}, parameter {i}: analytic {analytic:e} vs numeric {numeric:e} \
                 (relative error {rel:e})"
            );
        }
    }

    assert!(
        started.elapsed() < Duration::from_secs(60),
        "gradient check must finish within a minute"
    );
}

// ---------------------------------------------------------------------------
// 4. Bellman target closed cases, exact.
// ---------------------------------------------------------------------------

#[test]
fn bellman_targets_are_exact_in_closed_cases() {
    // A 4-1-2 network with zero weights and output biases [2.0, -1.0]
    // produces Q = [2.0, -1.0] for every state, so max Q(s', ·) = 2.0.
    let mut net = QNetwork::from_arch(&[4, 1, 2]).expect("4-1-2 network");
    // Flat order: layer-0 weights (4), layer-0 bias (1), layer-1 weights (2),
    // layer-1 biases (2).
    net.set_param(7, 2.0);
    net.set_param(8, -1.0);
    let target = net.sync_target();
    let state = CartState::ZERO;
    assert_eq!(target.forward(&state), [2.0, -1.0]);

    // Terminal transition: the bootstrap term vanishes entirely.
    assert_eq!(bellman_target(0.37, &state, true, &target, 0.95), 0.37);
    // γ = 0: same value through the non-terminal path.
    assert_eq!(bellman_target(0.37, &state, false, &target, 0.0), 0.37);
    // r = 1, γ = 0.95, max Q = 2 → exactly 2.9.
    assert_eq!(bellman_target(1.0, &state, false, &target, 0.95), 2.9);
}

// ---------------------------------------------------------------------------
// 5. Expert competence.
// ---------------------------------------------------------------------------

#[test]
fn expert_controller_survives_ten_thousand_steps() {
    let started = Instant::now();
    let physics = PhysicsParams {
        max_episode_steps: 10_000,
        ..PhysicsParams::default()
    };
    let reward = RewardParams::default();

    let mut survived = 0;
    for seed in 1..=10u64 {
        let mut expert = Expert::default();
        let report =
            evaluate_policy(&mut expert, &physics, &reward, 1, seed).expect("expert rollout");
        if report.steps[0] >= 10_000 {
            survived += 1;
        }
    }

    assert!(
        survived >= 9,
        "expert reached the 10000-step cap in only {survived}/10 seeds"
    );
    assert!(
        started.elapsed() < Duration::from_secs(60),
        "expert competence check must finish within a minute"
    );
}

// ---------------------------------------------------------------------------
// Desk-scale training fixture shared by the ordering and regret tests.
// ---------------------------------------------------------------------------

struct Desk {
    augmented: ExperimentResult,
    rl_only: ExperimentResult,
    il_only: ExperimentResult,
    out_dir: PathBuf,
    wall: Duration,
}

static DESK: OnceLock<Desk> = OnceLock::new();

/// Shared hyperparameters for the three desk-scale arms. Calibrated once and
/// frozen: a 500-step episode cap keeps the budget small, the faster ε decay
/// and 10k replay buffer suit that short horizon. All three schedules train
/// with exactly these settings; only the phase budgets differ.
fn desk_train_config() -> TrainConfig {
    TrainConfig {
        epsilon_decay: 0.96,
        buffer_capacity: 10_000,
        physics: PhysicsParams {
            max_episode_steps: 500,
            ..PhysicsParams::default()
        },
        ..TrainConfig::default()
    }
}

fn desk_spec(name: &str, phases: Vec<Phase>) -> ExperimentSpec {
    ExperimentSpec {
        name: name.to_owned(),
        phases,
        train: desk_train_config(),
        seeds: vec![1, 2, 3, 4, 5],
        eval_episodes: DEFAULT_EVAL_EPISODES,
        eval_seed: DEFAULT_EVAL_SEED,
    }
}

fn desk() -> &'static Desk {
    DESK.get_or_init(|| {
        let out_dir = std::env::temp_dir().join(format!("aqil-acceptance-{}", std::process::id()));
        let started = Instant::now();
        let augmented = run_experiment(
            &desk_spec(
                "augmented",
                vec![Phase::imitation(100), Phase::reinforcement(100)],
            ),
            &out_dir,
        )
        .expect("augmented desk run");
        let rl_only = run_experiment(
            &desk_spec("rl-only", vec![Phase::reinforcement(200)]),
            &out_dir,
        )
        .expect("rl-only desk run");
        let il_only = run_experiment(&desk_spec("il-only", vec![Phase::imitation(200)]), &out_dir)
            .expect("il-only desk run");
        Desk {
            augmented,
            rl_only,
            il_only,
            out_dir,
            wall: started.elapsed(),
        }
    })
}

fn eval_means(result: &ExperimentResult) -> Vec<f64> {
    result.outcomes.iter().map(|o| o.eval.mean_score).collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    assert_eq!(
        xs.len() % 2,
        1,
        "median is defined here for odd-length pools"
    );
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    xs[xs.len() / 2]
}

// ---------------------------------------------------------------------------
// 6. Desk-scale schedule comparison.
// ---------------------------------------------------------------------------

#[test]
fn augmented_schedule_beats_both_baselines_at_desk_scale() {
    let desk = desk();
    let augmented = median(eval_means(&desk.augmented));
    let rl_only = median(eval_means(&desk.rl_only));
    let il_only = median(eval_means(&desk.il_only));

    assert!(
        augmented > rl_only && augmented > il_only,
        "median evaluation scores must order augmented first: \
         augmented {augmented:.2}, rl-only {rl_only:.2}, il-only {il_only:.2}"
    );
    assert!(
        augmented >= RL_MARGIN * rl_only,
        "augmented median {augmented:.2} must be at least {RL_MARGIN}x \
         the rl-only median {rl_only:.2}"
    );
    assert!(
        desk.wall < Duration::from_secs(30 * 60),
        "desk-scale comparison must finish within 30 minutes, took {:?}",
        desk.wall
    );
}

// ---------------------------------------------------------------------------
// 7. Regret report: goal inequality and exact telescoping.
// ---------------------------------------------------------------------------

#[test]
fn augmented_reinforcement_regret_is_bounded_by_il_baseline() {
    let desk = desk();
    let pool = vec![
        experiment_policy_value(&desk.augmented),
        experiment_policy_value(&desk.rl_only),
        experiment_policy_value(&desk.il_only),
        expert_policy_value(&desk.augmented.spec, EXPERT_POLICY_NAME).expect("expert evaluation"),
    ];
    let reports = regret_reports(&pool, EXPERT_POLICY_NAME).expect("regret pool");

    for r in &reports {
        assert_eq!(
            r.reinforcement_regret.to_bits(),
            (r.imitation_regret + r.expert_regret).to_bits(),
            "telescoping identity must hold exactly for `{}`",
            r.policy
        );
    }

    let regret_of = |name: &str| {
        reports
            .iter()
            .find(|r| r.policy == name)
            .unwrap_or_else(|| panic!("report for `{name}`"))
            .reinforcement_regret
    };
    let augmented = regret_of("augmented");
    let il_only = regret_of("il-only");
    assert!(
        augmented <= il_only,
        "augmented reinforcement regret {augmented:.3} must not exceed \
         the imitation-only baseline's {il_only:.3}"
    );
}

// ---------------------------------------------------------------------------
// 8. Bitwise determinism of persisted runs.
// ---------------------------------------------------------------------------

#[test]
fn identical_config_and_seed_reproduce_episode_csvs_bitwise() {
    let desk = desk();
    let first = &desk.augmented.outcomes[0];
    assert_eq!(first.seed, 1);

    let mut spec = desk_spec(
        "augmented",
        vec![Phase::imitation(100), Phase::reinforcement(100)],
    );
    spec.seeds = vec![1];
    let rerun_dir = desk.out_dir.join("rerun");
    let rerun = run_experiment(&spec, &rerun_dir).expect("rerun of seed 1");

    let original_csv = std::fs::read(&first.episodes_csv).expect("first episode CSV");
    let rerun_csv = std::fs::read(&rerun.outcomes[0].episodes_csv).expect("rerun episode CSV");
    assert_eq!(
        original_csv, rerun_csv,
        "episode CSV bytes must be identical across reruns"
    );

    let original_weights = std::fs::read(&first.weights_file).expect("first weights");
    let rerun_weights = std::fs::read(&rerun.outcomes[0].weights_file).expect("rerun weights");
    assert_eq!(
        original_weights, rerun_weights,
        "exported weight bytes must be identical across reruns"
    );
}
