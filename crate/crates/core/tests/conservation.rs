//! Energy ledger balance and served-traffic bounds at every tick of full runs.

mod common;

use isatn_core::sim::{initial_agent, run_world};
use isatn_core::{default_paper_scenario, Model, PolicyKind, World};

#[test]
fn ledgers_balance_every_tick() {
    let model = Model::new(&default_paper_scenario()).unwrap();
    let world = World::new(&model, 11, None).unwrap();
    for policy in [PolicyKind::Static, PolicyKind::QosOnly, PolicyKind::EnergyOnly] {
        let run = run_world(&model, &world, policy, None).unwrap();
        common::checks::conservation(&model, &world, &run).unwrap();
    }
}

#[test]
fn corrective_actions_keep_ledgers_balanced() {
    let mut spec = default_paper_scenario();
    spec.days = 3;
    let model = Model::new(&spec).unwrap();
    let world = World::new(&model, 11, None).unwrap();
    let agent = initial_agent(&model, world.trace.max_intensity(), 11);
    let run = run_world(&model, &world, PolicyKind::MpcRl, Some(&agent)).unwrap();
    assert!(!run.corrections.is_empty());
    common::checks::conservation(&model, &world, &run).unwrap();
}
