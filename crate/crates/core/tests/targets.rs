use morl_core::env::{Action, RewardVector, HORIZON};
use morl_core::morl::*;
use morl_core::neural::{Mlp, MlpArchitecture};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn update(alpha: f64) -> UpdateConfig {
    UpdateConfig { alpha, gamma: 1.0 }
}

fn features(t: usize, fill: f64) -> StateFeatures {
    StateFeatures::from_raw(t, vec![fill; StateFeatures::dim(t)]).unwrap()
}

fn act(i: usize) -> Action {
    Action::new(i).unwrap()
}

/// Network at step `t` that ignores the state and returns `bias`.
fn constant_net(t: usize, bias: &[f64]) -> Mlp {
    let arch = MlpArchitecture::new(StateFeatures::input_dim(t), vec![1], bias.len());
    let mut params = vec![0.0; arch.param_count()];
    let n = params.len();
    params[n - bias.len()..].copy_from_slice(bias);
    Mlp::from_params(arch, params).unwrap()
}

/// Step-`t` network with outputs `(1 + tanh(u), 1 - tanh(u))`, `u` the
/// normalized action: component 0 prefers the largest force, component 1
/// the smallest.
fn opposed_net(t: usize) -> Mlp {
    let input = StateFeatures::input_dim(t);
    let arch = MlpArchitecture::new(input, vec![2], 2);
    let mut p = vec![0.0; arch.param_count()];
    // Hidden layer: W is input x 2 row-major, then 2 biases.
    let action_row = input - 1;
    p[action_row * 2] = 1.0;
    p[action_row * 2 + 1] = -1.0;
    let out_w = input * 2 + 2;
    p[out_w] = 1.0; // h0 -> o0
    p[out_w + 3] = 1.0; // h1 -> o1
    p[out_w + 4] = 1.0;
    p[out_w + 5] = 1.0;
    Mlp::from_params(arch, p).unwrap()
}

fn terminal_memory(reward: RewardVector) -> SampleMemory {
    let mut m = SampleMemory::new();
    m.push(SampleTuple {
        t: 4,
        s: features(4, 0.3),
        a: act(2),
        s_next: None,
        reward,
    });
    m
}

fn step3_memory() -> SampleMemory {
    let mut m = SampleMemory::new();
    m.push(SampleTuple {
        t: 3,
        s: features(3, 0.1),
        a: act(1),
        s_next: Some(features(4, 0.2)),
        reward: RewardVector::ZERO,
    });
    m
}

#[test]
fn first_generation_terminal_target() {
    let m = terminal_memory(RewardVector::new(5.0, 8.0));
    let ctx = TargetContext {
        old: None,
        next: None,
        update: update(0.7),
        reward: RewardTarget::Vector,
    };
    let set = build_targets_off_policy(&m, 4, &ctx);
    assert!((set.targets[[0, 0]] - 3.5).abs() < 1e-12);
    assert!((set.targets[[0, 1]] - 5.6).abs() < 1e-12);
    assert_eq!(set.inputs.ncols(), 20);
}

#[test]
fn convex_combination_fixed_point_is_exact() {
    let r = RewardVector::new(5.0, 8.0);
    let m = terminal_memory(r);
    let old = constant_net(4, &[5.0, 8.0]);
    for alpha in [0.1, 0.3, 0.7, 1.0] {
        let ctx = TargetContext {
            old: Some(&old),
            next: None,
            update: update(alpha),
            reward: RewardTarget::Vector,
        };
        let set = build_targets_off_policy(&m, 4, &ctx);
        assert_eq!(set.targets.row(0).to_vec(), vec![5.0, 8.0]);
    }
}

#[test]
fn off_policy_bootstrap_is_componentwise_max() {
    let m = step3_memory();
    let next = opposed_net(4);
    let ctx = TargetContext {
        old: None,
        next: Some(&next),
        update: update(1.0),
        reward: RewardTarget::Vector,
    };
    let set = build_targets_off_policy(&m, 3, &ctx);
    // Component 0 peaks at the largest force, component 1 at the smallest;
    // no single action attains both maxima.
    assert!((set.targets[[0, 0]] - (1.0 + 1f64.tanh())).abs() < 1e-12);
    assert!((set.targets[[0, 1]] - 1.0).abs() < 1e-12);
}

#[test]
fn on_policy_target_uses_the_greedy_action() {
    let m = step3_memory();
    let next = opposed_net(4);
    let ctx = TargetContext {
        old: None,
        next: Some(&next),
        update: update(1.0),
        reward: RewardTarget::Vector,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut policy = ExplorativePolicy {
        weights: WeightVector::new(5.0, 5.0).unwrap(),
        scalarization: Scalarization::Harmonic,
        epsilon: 0.0,
        rng: &mut rng,
    };
    let on = build_targets_on_policy(&m, 3, &ctx, &mut policy);
    let off = build_targets_off_policy(&m, 3, &ctx);
    // (1 + x)(1 - x) peaks at x = 0, the smallest force, whose first
    // component is dominated by the largest force.
    assert_eq!(on.targets.row(0).to_vec(), vec![1.0, 1.0]);
    assert!(on.targets[[0, 0]] < off.targets[[0, 0]]);
    assert_eq!(on.targets[[0, 1]], off.targets[[0, 1]]);
}

fn random_net<R: Rng>(t: usize, out: usize, rng: &mut R) -> Mlp {
    let arch = architecture_for(t, out);
    let params = (0..arch.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Mlp::from_params(arch, params).unwrap()
}

fn random_features<R: Rng>(t: usize, rng: &mut R) -> StateFeatures {
    StateFeatures::from_raw(t, (0..StateFeatures::dim(t)).map(|_| rng.random()).collect()).unwrap()
}

#[test]
fn both_rules_agree_at_the_terminal_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut m = SampleMemory::new();
    for _ in 0..50 {
        m.push(SampleTuple {
            t: 4,
            s: random_features(4, &mut rng),
            a: Action::uniform(&mut rng),
            s_next: None,
            reward: RewardVector::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)),
        });
    }
    let old = random_net(4, 2, &mut rng);
    let ctx = TargetContext {
        old: Some(&old),
        next: None,
        update: update(0.7),
        reward: RewardTarget::Vector,
    };
    let mut policy_rng = ChaCha8Rng::seed_from_u64(12);
    let mut policy = ExplorativePolicy {
        weights: WeightVector::new(3.0, 7.0).unwrap(),
        scalarization: Scalarization::Harmonic,
        epsilon: 0.5,
        rng: &mut policy_rng,
    };
    let on = build_targets_on_policy(&m, 4, &ctx, &mut policy);
    let off = build_targets_off_policy(&m, 4, &ctx);
    assert_eq!(on, off);
}

#[test]
fn off_policy_target_dominates_on_policy_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut cases = 0;
    while cases < 10_000 {
        let t = rng.random_range(0..HORIZON - 1);
        let mut m = SampleMemory::new();
        for _ in 0..100 {
            m.push(SampleTuple {
                t,
                s: random_features(t, &mut rng),
                a: Action::uniform(&mut rng),
                s_next: Some(random_features(t + 1, &mut rng)),
                reward: RewardVector::ZERO,
            });
        }
        let old = random_net(t, 2, &mut rng);
        let next = random_net(t + 1, 2, &mut rng);
        let ctx = TargetContext {
            old: Some(&old),
            next: Some(&next),
            update: update(rng.random_range(0.05..=1.0)),
            reward: RewardTarget::Vector,
        };
        let mut policy = ExplorativePolicy {
            weights: WeightVector::from_thickness_level(rng.random_range(1..=9)).unwrap(),
            scalarization: Scalarization::Harmonic,
            epsilon: rng.random(),
            rng: &mut rng,
        };
        let on = build_targets_on_policy(&m, t, &ctx, &mut policy);
        let off = build_targets_off_policy(&m, t, &ctx);
        for (o, f) in on.targets.iter().zip(off.targets.iter()) {
            assert!(f >= o, "off {f} < on {o}");
        }
        cases += m.len_at(t);
    }
}

#[test]
fn arithmetic_reward_target_is_scalar() {
    let m = terminal_memory(RewardVector::new(5.0, 8.0));
    let w = WeightVector::new(1.0, 1.0).unwrap();
    let ctx = TargetContext {
        old: None,
        next: None,
        update: update(0.7),
        reward: RewardTarget::Arithmetic(w),
    };
    let set = build_targets_off_policy(&m, 4, &ctx);
    assert_eq!(set.targets.ncols(), 1);
    assert!((set.targets[[0, 0]] - 0.7 * 6.5).abs() < 1e-12);
}

#[test]
fn baseline_example_scalarizes_before_the_update() {
    let m = terminal_memory(RewardVector::new(2.0, 8.0));
    let w = WeightVector::new(5.0, 5.0).unwrap();
    assert!((scalarize_arithmetic([2.0, 8.0], &w) - 5.0).abs() < 1e-12);
    let ctx = TargetContext {
        old: None,
        next: None,
        update: update(0.7),
        reward: RewardTarget::Arithmetic(w),
    };
    let set = build_targets_off_policy(&m, 4, &ctx);
    assert!((set.targets[[0, 0]] - 3.5).abs() < 1e-12);
}
