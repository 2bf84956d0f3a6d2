//! Scenario builders and replay helpers shared by the integration tests.
#![allow(dead_code)]

pub mod checks;

use isatn_core::config::ScenarioSpec;
use isatn_core::engine::{step, Compiled, SimState, TickOut};
use isatn_core::environment::RainEvent;
use isatn_core::linkmodel::Band;
use isatn_core::orchestration::lattice::{EdgeMode, GatewayMode};
use isatn_core::orchestration::HourConfig;
use isatn_core::{default_paper_scenario, Model, World};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Two urban zones in different regions, one gateway each, one day.
pub fn tiny_spec(rng: &mut ChaCha8Rng) -> ScenarioSpec {
    let mut s = default_paper_scenario();
    s.days = 1;
    s.zones.retain(|z| z.id == "urban-harbor" || z.id == "urban-east");
    s.ran.macro_count = s.zones.iter().map(|z| z.macro_sites).sum();
    s.ran.small_count = s.zones.iter().map(|z| z.small_cells).sum();
    s.gateways.sites.retain(|g| g.id == "gw-harbor" || g.id == "gw-hub");
    s.gateways.count = 2;
    for g in &mut s.gateways.sites {
        g.throughput_bps *= rng.random_range(0.5..1.5);
    }
    s.uavs.count = 2;
    s.uavs.swap_pads.truncate(1);
    s.traffic_profiles.surge = None;
    s.traffic_profiles.embb.peak_bps.urban *= rng.random_range(0.3..1.5);
    s.rain_events = if rng.random_bool(0.5) {
        let start = f64::from(rng.random_range(0..3u32));
        vec![RainEvent {
            start_hour: start,
            end_hour: start + 1.0,
            affected_bands: vec![Band::Ka, Band::MicrowaveBackhaul],
            attenuation_db: rng.random_range(5.0..20.0),
        }]
    } else {
        Vec::new()
    };
    let lat = &mut s.orchestration.lattice;
    lat.gateway_modes = vec![GatewayMode::Nearest, GatewayMode::RegionFirst(1)];
    lat.uav_levels = vec![0.0];
    lat.sleep_levels = vec![0.0, 0.6];
    lat.edge_modes = vec![EdgeMode::Local];
    s.seed = rng.random();
    s
}

/// A default scenario shortened to `days`, without surge or rain.
pub fn calm_spec(days: u32) -> ScenarioSpec {
    let mut s = default_paper_scenario();
    s.days = days;
    s.rain_events.clear();
    s.traffic_profiles.surge = None;
    s
}

/// Steps the engine through `configs` from the initial state, one hour per
/// config, switching to each correction at its tick.
pub fn replay<F: FnMut(&SimState, &TickOut)>(
    model: &Model,
    world: &World,
    configs: &[HourConfig],
    corrections: &[(u64, HourConfig)],
    mut each: F,
) {
    let mut state = SimState::initial(model);
    let mut out = TickOut::new(model);
    let mut pending = corrections.iter().peekable();
    for cfg in configs {
        let mut compiled = Compiled::new(model, cfg);
        for _ in 0..model.ticks_per_hour {
            if let Some((_, c)) = pending.next_if(|(t, _)| *t == state.tick) {
                compiled = Compiled::new(model, c);
            }
            step(model, world, &mut state, &compiled, &mut out);
            each(&state, &out);
        }
    }
}
