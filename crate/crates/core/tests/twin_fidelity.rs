//! The twin replays realized inputs to the same KPIs as the engine, bit for bit.

mod common;

use isatn_core::sim::{drive, BaselinePolicy, DriveOptions};
use isatn_core::twin::{evaluate_plan, Forecast};
use isatn_core::{default_paper_scenario, Model, PolicyKind, World};

#[test]
fn twin_matches_engine_over_a_day() {
    let model = Model::new(&default_paper_scenario()).unwrap();
    for (seed, start) in common::checks::TWIN_WINDOWS {
        common::checks::twin_fidelity(&model, seed, start).unwrap();
    }
}

#[test]
fn plan_outside_forecast_is_rejected() {
    let model = Model::new(&default_paper_scenario()).unwrap();
    let world = World::new(&model, 1, None).unwrap();
    let opts = DriveOptions {
        record: true,
        checkpoints: true,
        hours: Some(3),
    };
    let mut policy = BaselinePolicy::new(&model, PolicyKind::Static).unwrap();
    let trace = drive(&model, &world, &mut policy, None, opts).unwrap();
    let forecast = Forecast::realized(&model, &world, 0, 2);
    assert!(evaluate_plan(&model, &trace.checkpoints[0], &trace.configs, &forecast).is_err());
}
