//! Identical inputs produce byte-identical output files.

mod common;

use isatn_core::sim::initial_agent;
use isatn_core::{Model, PolicyKind, World};

#[test]
fn reruns_write_identical_files() {
    let spec = common::calm_spec(2);
    let model = Model::new(&spec).unwrap();
    for policy in [PolicyKind::Static, PolicyKind::EnergyOnly] {
        common::checks::determinism(&model, 9, policy, None).unwrap();
    }
    let scale = World::new(&model, 9, None).unwrap().trace.max_intensity();
    let agent = initial_agent(&model, scale, 9);
    common::checks::determinism(&model, 9, PolicyKind::MpcRl, Some(&agent)).unwrap();
}
