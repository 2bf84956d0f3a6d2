//! Tripling every carbon intensity changes no decision and triples emissions.

mod common;

use isatn_core::{default_paper_scenario, Model, PolicyKind, World};

#[test]
fn tripled_carbon_keeps_decisions_and_triples_emissions() {
    let mut spec = default_paper_scenario();
    spec.days = 3;
    let model = Model::new(&spec).unwrap();
    let world = World::new(&model, 5, None).unwrap();
    let policies = [PolicyKind::Static, PolicyKind::QosOnly, PolicyKind::EnergyOnly, PolicyKind::Mpc];
    common::checks::scale_invariance(&model, &world, &policies).unwrap();
}
