//! Learning sanity of the actor-critic controller.

mod common;

use isatn_core::sim::{initial_agent, mpc_configs, train_rl};
use isatn_core::{Model, World};

#[test]
fn critic_settles_at_discounted_return() {
    for reward in [-2.5, 0.75] {
        common::checks::critic_fixed_point(reward, 20_000).unwrap();
    }
}

#[test]
fn short_training_is_reproducible_and_moves_weights() {
    let spec = common::calm_spec(1);
    let model = Model::new(&spec).unwrap();
    let world = World::new(&model, spec.seed, None).unwrap();
    let plan = mpc_configs(&model, &world).unwrap();
    let (a, logs) = train_rl(&model, &plan, 7, 3, None).unwrap();
    let (b, _) = train_rl(&model, &plan, 7, 3, None).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(logs.len(), 3);
    assert_eq!(a.trained_episodes, 3);
    let start = initial_agent(&model, world.trace.max_intensity(), 7);
    assert_ne!(a.critic, start.critic);
}
