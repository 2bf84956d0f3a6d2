//! The per-tick step function shared by the simulator and the digital twin.
//!
//! [`Model`] holds everything fixed for a scenario (topology, sky table,
//! precomputed link figures). Exogenous inputs come through [`Exogenous`],
//! implemented both by the realized [`World`] and by twin forecasts, so the
//! twin and the engine run literally the same code.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Arc;

use crate::config::{ScenarioSpec, SurgeSpec};
use crate::energy::{EnergyDraw, Layer, SleepMode};
use crate::environment::{rain_attenuation_db, scenario_carbon_trace, CarbonTrace, RainEvent, TrafficModel, EMBB, MIOT, URLLC};
use crate::error::{Error, Result};
use crate::linkmodel::{capacity_from_snr, path_loss_db, queueing_ms, slant_range_km, Band, PathEnv, LIGHT_KM_PER_MS};
use crate::orchestration::{Handover, HourConfig, Placement, Provisioning};
use crate::topology::{distance_km, SiteKind, SkyTable, Topology, UavMode, EARTH_RADIUS_KM, NO_SATELLITE};

/// Index of Ka and microwave backhaul attenuation in [`Exogenous::rain_db`].
pub const RAIN_KA: usize = 0;
pub const RAIN_MW: usize = 1;

/// Inputs the network does not control.
pub trait Exogenous {
    /// Offered bits per class for one zone and tick.
    fn demand(&self, tick: u64, zone: usize) -> [f64; 3];
    /// Rain attenuation (dB) on Ka and microwave links.
    fn rain_db(&self, tick: u64) -> [f64; 2];
    /// Carbon intensity (g/kWh) and renewable share for a region.
    fn carbon(&self, tick: u64, region: usize) -> (f64, f64);
}

#[derive(Debug, Clone, Copy)]
struct TransportLink {
    fiber: bool,
    prop_ms: f64,
    path_loss_db: f64,
}

/// Scenario-wide constants and precomputed link figures.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ScenarioSpec,
    pub topo: Topology,
    pub sky: Arc<SkyTable>,
    pub zones: usize,
    pub regions: usize,
    pub gateways: usize,
    pub tick_h: f64,
    pub tick_s: f64,
    pub ticks_per_hour: u64,
    pub total_ticks: u64,
    pub zone_region: Vec<usize>,
    pub gateway_region: Vec<usize>,
    /// Largest-compute gateway of each region.
    pub region_hub: Vec<usize>,
    /// Largest-compute gateway overall; drains batch work placed locally.
    pub default_host: usize,
    /// Peak-hour offered load per zone (bps), from the profiles.
    pub nominal_load_bps: Vec<f64>,
    pub macro_cap: Vec<f64>,
    pub small_cap: Vec<f64>,
    pub uav_cap: Vec<f64>,
    access_ms: Vec<f64>,
    transport: Vec<TransportLink>,
    pub macro_zone: Vec<usize>,
    pub small_zone: Vec<usize>,
    /// Per zone, ordinals of its macro sites in `HourConfig::macro_power_mode`.
    pub zone_macros: Vec<Vec<usize>>,
    /// Per zone, ordinals of its small cells in `HourConfig::small_cell_sleep`.
    pub zone_smalls: Vec<Vec<usize>>,
    pub uav_capacity_wh: f64,
    hover_w: f64,
    cruise_w: f64,
}

impl Model {
    pub fn new(spec: &ScenarioSpec) -> Result<Self> {
        let violations = crate::config::validate(spec);
        if !violations.is_empty() {
            return Err(Error::Validation { violations });
        }
        let topo = Topology::build(spec)?;
        let total_ticks = spec.total_ticks();
        let tick_s = f64::from(spec.epoch_minutes) * 60.0;
        let sky = Arc::new(SkyTable::build(&topo, total_ticks, tick_s));
        Self::with_sky(spec, topo, sky)
    }

    /// Builds a model reusing an existing sky table (same constellation and horizon).
    pub fn with_sky(spec: &ScenarioSpec, topo: Topology, sky: Arc<SkyTable>) -> Result<Self> {
        let l = &spec.links;
        let zones = topo.zones.len();
        let gateways = topo.gateways.len();
        let regions = spec.regions.len();
        let max_se = l.max_spectral_efficiency;
        let radio_cap = |r: &crate::config::RadioSpec, env: PathEnv, d: f64| -> Result<f64> {
            let pl = path_loss_db(d, r.carrier_ghz, r.env.unwrap_or(env), &l.exponents)?;
            Ok(capacity_from_snr(r.tx_power_dbm - pl - r.noise_dbm, r.bandwidth_hz, max_se))
        };
        let mut macro_cap = Vec::with_capacity(zones);
        let mut small_cap = Vec::with_capacity(zones);
        let mut uav_cap = Vec::with_capacity(zones);
        let mut access_ms = Vec::with_capacity(zones);
        for z in &topo.zones {
            let env = z.class.path_env();
            macro_cap.push(radio_cap(&l.macro_cell, env, l.macro_cell.distance_km.get(z.class))?);
            small_cap.push(radio_cap(&l.small_cell, env, l.small_cell.distance_km.get(z.class))?);
            uav_cap.push(radio_cap(&l.uav, env, l.uav.distance_km.get(z.class))?);
            access_ms.push(l.access_latency_ms + l.macro_cell.distance_km.get(z.class) / LIGHT_KM_PER_MS);
        }
        let mut transport = Vec::with_capacity(zones * gateways);
        for z in &topo.zones {
            for g in &topo.gateways {
                let d = distance_km(z.centroid, g.position).max(0.1);
                let fiber = z.region == g.region;
                let mw = &l.microwave;
                transport.push(TransportLink {
                    fiber,
                    prop_ms: if fiber { d / l.fiber_km_per_ms } else { d / LIGHT_KM_PER_MS },
                    path_loss_db: path_loss_db(d, mw.carrier_ghz, mw.env.unwrap_or(PathEnv::SpaceGround), &l.exponents)?,
                });
            }
        }
        let pick_hub = |filter: &dyn Fn(usize) -> bool| -> Option<usize> {
            (0..gateways)
                .filter(|&g| filter(g))
                .fold(None, |best: Option<usize>, g| match best {
                    Some(b) if topo.gateways[b].compute_capacity >= topo.gateways[g].compute_capacity => Some(b),
                    _ => Some(g),
                })
        };
        let region_hub = (0..regions)
            .map(|r| pick_hub(&|g| topo.gateways[g].region == r).unwrap_or(0))
            .collect();
        let default_host = pick_hub(&|_| true).unwrap_or(0);
        let p = &spec.traffic_profiles;
        let nominal_load_bps = spec
            .zones
            .iter()
            .map(|z| {
                p.embb.peak_bps.get(z.class)
                    + if z.industrial { p.urllc.industrial_bps } else { p.urllc.other_bps }
                    + p.miot.mean_bps.get(z.class)
            })
            .collect();
        let macro_zone: Vec<usize> = topo.sites.iter().filter(|s| s.kind == SiteKind::Macro).map(|s| s.zone).collect();
        let small_zone: Vec<usize> = topo.sites.iter().filter(|s| s.kind == SiteKind::Small).map(|s| s.zone).collect();
        let group = |v: &[usize]| {
            let mut out = vec![Vec::new(); zones];
            for (i, &z) in v.iter().enumerate() {
                out[z].push(i);
            }
            out
        };
        let zone_macros = group(&macro_zone);
        let zone_smalls = group(&small_zone);
        let uavp = &spec.power_catalog.uav;
        let hover_w = uavp.uav_hover_w.unwrap_or(uavp.active_w);
        let cruise_w = uavp.uav_cruise_w.unwrap_or(uavp.active_w);
        Ok(Model {
            zones,
            regions,
            gateways,
            tick_h: spec.tick_hours(),
            tick_s: f64::from(spec.epoch_minutes) * 60.0,
            ticks_per_hour: u64::from(spec.ticks_per_hour()),
            total_ticks: spec.total_ticks(),
            zone_region: topo.zones.iter().map(|z| z.region).collect(),
            gateway_region: topo.gateways.iter().map(|g| g.region).collect(),
            region_hub,
            default_host,
            nominal_load_bps,
            macro_cap,
            small_cap,
            uav_cap,
            access_ms,
            transport,
            macro_zone,
            small_zone,
            zone_macros,
            zone_smalls,
            uav_capacity_wh: spec.uavs.endurance_h * hover_w,
            hover_w,
            cruise_w,
            spec: spec.clone(),
            topo,
            sky,
        })
    }

    /// The same model with a different scenario body (power, traffic, events)
    /// but identical geometry and horizon.
    pub fn respec(&self, spec: &ScenarioSpec) -> Result<Self> {
        Self::with_sky(spec, Topology::build(spec)?, self.sky.clone())
    }

    pub fn hour_of(&self, tick: u64) -> u32 {
        (tick / self.ticks_per_hour) as u32
    }

    /// Ground access capacity (bps) of a zone with every site awake and no UAVs.
    pub fn full_ground_capacity(&self, zone: usize) -> f64 {
        let (m, s) = &self.topo.zone_sites[zone];
        m.len() as f64 * self.macro_cap[zone] + s.len() as f64 * self.small_cap[zone]
    }

    fn transport(&self, zone: usize, gateway: usize) -> &TransportLink {
        &self.transport[zone * self.gateways + gateway]
    }

    /// Transport capacity from a zone to a gateway under microwave attenuation `mw_db`.
    pub fn transport_capacity(&self, zone: usize, gateway: usize, mw_db: f64) -> f64 {
        let t = self.transport(zone, gateway);
        let l = &self.spec.links;
        if t.fiber {
            l.fiber_capacity_bps
        } else {
            let mw = &l.microwave;
            capacity_from_snr(
                mw.tx_power_dbm - t.path_loss_db - mw_db - mw.noise_dbm,
                mw.bandwidth_hz,
                l.max_spectral_efficiency,
            )
        }
    }

    pub fn transport_is_fiber(&self, zone: usize, gateway: usize) -> bool {
        self.transport(zone, gateway).fiber
    }

    /// Satellite beam capacity at an elevation under Ka attenuation `ka_db`.
    pub fn beam_capacity(&self, elevation_deg: f64, ka_db: f64) -> f64 {
        let l = &self.spec.links;
        let s = &l.satellite;
        let d = slant_range_km(elevation_deg, self.spec.constellation.altitude_km, EARTH_RADIUS_KM);
        let pl = path_loss_db(d, s.carrier_ghz, s.env.unwrap_or(PathEnv::SpaceGround), &l.exponents).unwrap_or(f64::INFINITY);
        capacity_from_snr(s.tx_power_dbm - pl - ka_db - s.noise_dbm, s.bandwidth_hz, l.max_spectral_efficiency)
    }

    fn slant_ms(&self, elevation_deg: f64) -> f64 {
        slant_range_km(elevation_deg, self.spec.constellation.altitude_km, EARTH_RADIUS_KM) / LIGHT_KM_PER_MS
    }

    fn uav_speed_km_per_tick(&self) -> f64 {
        self.spec.uavs.cruise_speed_kmh * self.tick_h
    }

    fn reserve_wh(&self) -> f64 {
        self.spec.uavs.reserve_fraction * self.uav_capacity_wh
    }

    /// Battery a grounded UAV at `pos` needs to serve `zone` for an hour and come back.
    pub fn dispatch_need_wh(&self, pos: [f64; 2], zone: usize) -> f64 {
        let d = distance_km(pos, self.topo.zones[zone].centroid);
        2.0 * d / self.spec.uavs.cruise_speed_kmh * self.cruise_w + self.hover_w + self.reserve_wh()
    }
}

/// Realized exogenous inputs for one seed: precomputed demand, rain and carbon.
#[derive(Debug, Clone)]
pub struct World {
    pub seed: u64,
    zones: usize,
    ticks_per_hour: u64,
    demand: Vec<[f64; 3]>,
    rain: Vec<[f64; 2]>,
    pub trace: CarbonTrace,
    pub rain_events: Vec<RainEvent>,
    pub surge: Option<SurgeSpec>,
    pub traffic: TrafficModel,
}

impl World {
    pub fn new(model: &Model, seed: u64, base_dir: Option<&Path>) -> Result<Self> {
        let trace = scenario_carbon_trace(&model.spec, seed, base_dir)?;
        Ok(Self::build(
            model,
            seed,
            trace,
            model.spec.rain_events.clone(),
            model.spec.traffic_profiles.surge.clone(),
        ))
    }

    pub fn build(model: &Model, seed: u64, trace: CarbonTrace, rain_events: Vec<RainEvent>, surge: Option<SurgeSpec>) -> Self {
        let traffic = TrafficModel::new(&model.spec, seed).with_surge(surge.clone());
        let zones = model.zones;
        let n = model.total_ticks;
        let mut demand = vec![[0.0; 3]; zones * n as usize];
        for t in 0..n {
            let s = t as usize * zones;
            traffic.fill_epoch(t, &mut demand[s..s + zones]);
        }
        let rain = (0..n)
            .map(|t| {
                let h = t as f64 / model.ticks_per_hour as f64;
                [
                    rain_attenuation_db(&rain_events, Band::Ka, h),
                    rain_attenuation_db(&rain_events, Band::MicrowaveBackhaul, h),
                ]
            })
            .collect();
        World {
            seed,
            zones,
            ticks_per_hour: model.ticks_per_hour,
            demand,
            rain,
            trace,
            rain_events,
            surge,
            traffic,
        }
    }

    /// Same world with every carbon intensity multiplied by `factor`.
    pub fn with_scaled_carbon(&self, factor: f64) -> Self {
        let mut w = self.clone();
        w.trace = self.trace.scaled(factor);
        w
    }

    pub fn ticks(&self) -> u64 {
        (self.demand.len() / self.zones.max(1)) as u64
    }
}

impl Exogenous for World {
    #[inline]
    fn demand(&self, tick: u64, zone: usize) -> [f64; 3] {
        self.demand[tick as usize * self.zones + zone]
    }

    #[inline]
    fn rain_db(&self, tick: u64) -> [f64; 2] {
        self.rain[tick as usize]
    }

    #[inline]
    fn carbon(&self, tick: u64, region: usize) -> (f64, f64) {
        let h = (tick / self.ticks_per_hour) as u32;
        (self.trace.intensity(region, h), self.trace.renewable(region, h))
    }
}

/// An [`HourConfig`] reduced to per-zone counts for the step function.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub serving: Vec<usize>,
    pub macro_active: Vec<u32>,
    pub macro_sleep: Vec<u32>,
    pub small_active: Vec<u32>,
    pub small_sleep: Vec<u32>,
    pub uav_need: Vec<u32>,
    pub placement: [Placement; 3],
    pub defer: bool,
    pub full: bool,
    pub handover: Vec<Handover>,
}

impl Compiled {
    pub fn new(model: &Model, cfg: &HourConfig) -> Self {
        let z = model.zones;
        let mut c = Compiled {
            serving: cfg.serving_gateway.clone(),
            macro_active: vec![0; z],
            macro_sleep: vec![0; z],
            small_active: vec![0; z],
            small_sleep: vec![0; z],
            uav_need: vec![0; z],
            placement: cfg.edge_placement,
            defer: cfg.defer_analytics,
            full: cfg.provisioning == Provisioning::Full,
            handover: cfg.satellite_handover.clone(),
        };
        for (i, m) in cfg.macro_power_mode.iter().enumerate() {
            let zone = model.macro_zone[i];
            if *m == SleepMode::Active {
                c.macro_active[zone] += 1;
            } else {
                c.macro_sleep[zone] += 1;
            }
        }
        for (i, m) in cfg.small_cell_sleep.iter().enumerate() {
            let zone = model.small_zone[i];
            if *m == SleepMode::Active {
                c.small_active[zone] += 1;
            } else {
                c.small_sleep[zone] += 1;
            }
        }
        for &zone in &cfg.uav_slots {
            c.uav_need[zone] += 1;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UavTask {
    Idle { pad: u16 },
    Outbound { zone: u16 },
    Serving { zone: u16 },
    Returning { pad: u16 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavState {
    pub pos: [f64; 2],
    pub battery_wh: f64,
    pub task: UavTask,
    pub airborne_ticks: u32,
}

impl UavState {
    pub fn mode(&self) -> UavMode {
        match self.task {
            UavTask::Idle { .. } => UavMode::Grounded,
            UavTask::Outbound { .. } | UavTask::Returning { .. } => UavMode::Cruise,
            UavTask::Serving { .. } => UavMode::Hover,
        }
    }

    fn committed_zone(&self) -> Option<usize> {
        match self.task {
            UavTask::Outbound { zone } | UavTask::Serving { zone } => Some(zone as usize),
            _ => None,
        }
    }
}

/// Telemetry of the last completed tick, used for features and corrective actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Observed {
    pub zone_offered_bps: Vec<f64>,
    pub zone_served_frac: Vec<f64>,
    pub zone_ground_util: Vec<f64>,
    pub zone_ground_bps: Vec<f64>,
    pub zone_sat_bps: Vec<f64>,
    /// Bit mask of violated classes per zone.
    pub zone_violations: Vec<u8>,
    pub gateway_util: Vec<f64>,
    pub p95_all: f64,
    pub rain: bool,
}

/// Complete mutable network state between ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub tick: u64,
    pub uavs: Vec<UavState>,
    /// Serving satellite per zone.
    pub sat: Vec<u16>,
    /// Deferred analytics work: (creation hour, server-minutes), oldest first.
    pub backlog: VecDeque<(u32, f64)>,
    pub obs: Observed,
}

impl SimState {
    pub fn initial(model: &Model) -> Self {
        let pads = model.topo.pads.len().max(1);
        let uavs = (0..model.topo.uavs.len())
            .map(|i| UavState {
                pos: model.topo.pads[i % pads].position,
                battery_wh: model.uav_capacity_wh,
                task: UavTask::Idle { pad: (i % pads) as u16 },
                airborne_ticks: 0,
            })
            .collect();
        let z = model.zones;
        SimState {
            tick: 0,
            uavs,
            sat: vec![NO_SATELLITE; z],
            backlog: VecDeque::new(),
            obs: Observed {
                zone_offered_bps: vec![0.0; z],
                zone_served_frac: vec![1.0; z],
                zone_ground_util: vec![0.0; z],
                zone_ground_bps: vec![0.0; z],
                zone_sat_bps: vec![0.0; z],
                zone_violations: vec![0; z],
                gateway_util: vec![0.0; model.gateways],
                p95_all: 0.0,
                rain: false,
            },
        }
    }

    /// Battery energy (Wh) still to be recharged, by region of the nearest pad.
    pub fn pending_recharge_wh(&self, model: &Model, out: &mut [f64]) {
        for u in &self.uavs {
            let deficit = model.uav_capacity_wh - u.battery_wh;
            if deficit > 0.0 {
                let pad = match u.task {
                    UavTask::Idle { pad } | UavTask::Returning { pad } => pad as usize,
                    _ => model.topo.nearest_pad(u.pos),
                };
                out[model.topo.pads[pad].region] += deficit;
            }
        }
    }

    pub fn backlog_server_minutes(&self) -> f64 {
        self.backlog.iter().map(|b| b.1).sum()
    }

    pub fn idle_uavs(&self) -> usize {
        self.uavs.iter().filter(|u| matches!(u.task, UavTask::Idle { .. })).count()
    }
}

/// Measurements of one tick.
#[derive(Debug, Clone)]
pub struct TickOut {
    pub tick: u64,
    pub offered: [f64; 3],
    pub served: [f64; 3],
    pub p95: [f64; 3],
    pub p95_all: f64,
    pub layer_kwh: [f64; 4],
    pub region_kwh: Vec<f64>,
    pub emissions_g: f64,
    pub renewable_kwh: f64,
    pub sla_violations: u32,
    pub class_violations: [u32; 3],
    pub urllc_max_ms: f64,
    pub zone_offered: Vec<[f64; 3]>,
    pub zone_served: Vec<[f64; 3]>,
    pub draws: Vec<EnergyDraw>,
    samples: Vec<(f64, f64, u8)>,
    gw_in: Vec<[f64; 3]>,
    gw_frac: Vec<[f64; 3]>,
    gw_q: Vec<[Option<f64>; 3]>,
    host_need: Vec<[f64; 3]>,
    host_frac: Vec<[f64; 3]>,
    host_ms: Vec<f64>,
    zone_scratch: Vec<ZoneScratch>,
    hovering: Vec<u32>,
    uav_scratch: Vec<usize>,
    intensity: Vec<f64>,
    renewable: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
struct ZoneScratch {
    ground: [f64; 3],
    sat: [f64; 3],
    q_access: [Option<f64>; 3],
    q_sat: [Option<f64>; 3],
    q_transport: [Option<f64>; 3],
    sat_ms: f64,
    ground_cap: f64,
    access_load: f64,
    sat_load: f64,
}

impl TickOut {
    pub fn new(model: &Model) -> Self {
        TickOut {
            tick: 0,
            offered: [0.0; 3],
            served: [0.0; 3],
            p95: [0.0; 3],
            p95_all: 0.0,
            layer_kwh: [0.0; 4],
            region_kwh: vec![0.0; model.regions],
            emissions_g: 0.0,
            renewable_kwh: 0.0,
            sla_violations: 0,
            class_violations: [0; 3],
            urllc_max_ms: 0.0,
            zone_offered: vec![[0.0; 3]; model.zones],
            zone_served: vec![[0.0; 3]; model.zones],
            draws: Vec::with_capacity(64),
            samples: Vec::with_capacity(model.zones * 9),
            gw_in: vec![[0.0; 3]; model.gateways],
            gw_frac: vec![[1.0; 3]; model.gateways],
            gw_q: vec![[None; 3]; model.gateways],
            host_need: vec![[0.0; 3]; model.gateways],
            host_frac: vec![[1.0; 3]; model.gateways],
            host_ms: vec![0.0; model.gateways],
            zone_scratch: vec![ZoneScratch::default(); model.zones],
            hovering: vec![0; model.zones],
            uav_scratch: Vec::with_capacity(model.topo.uavs.len()),
            intensity: vec![0.0; model.regions],
            renewable: vec![0.0; model.regions],
        }
    }

    pub fn total_kwh(&self) -> f64 {
        self.layer_kwh.iter().sum()
    }

    pub fn bits_delivered(&self) -> f64 {
        self.served.iter().sum()
    }

    pub fn hovering(&self) -> &[u32] {
        &self.hovering
    }
}

#[inline]
fn take(demand: &mut f64, room: &mut f64) -> f64 {
    let x = demand.min(*room).max(0.0);
    *demand -= x;
    *room -= x;
    x
}

/// Priority fill of per-class loads (URLLC, eMBB, mIoT) into a capacity.
#[inline]
fn priority_fill(load: [f64; 3], capacity: f64) -> [f64; 3] {
    let mut room = capacity.max(0.0);
    let mut out = [0.0; 3];
    for c in [URLLC, EMBB, MIOT] {
        let mut d = load[c];
        out[c] = take(&mut d, &mut room);
    }
    out
}

/// Priority queueing delay per class: each class sees the load of itself and higher classes.
#[inline]
fn priority_queue(load: [f64; 3], capacity: f64, burst_bits: f64) -> [Option<f64>; 3] {
    let u = load[URLLC];
    let e = u + load[EMBB];
    let m = e + load[MIOT];
    let q = |l: f64| {
        if l <= 0.0 && capacity <= 0.0 {
            Some(0.0)
        } else {
            queueing_ms(l, capacity, burst_bits)
        }
    };
    let mut out = [None; 3];
    out[URLLC] = q(u);
    out[EMBB] = q(e);
    out[MIOT] = q(m);
    out
}

/// Bits-weighted percentile over (latency, bits) samples sorted by latency.
fn weighted_percentile(sorted: &[(f64, f64, u8)], class: Option<u8>, total: f64, p: f64) -> f64 {
    if !(total > 0.0) {
        return 0.0;
    }
    let target = p * total;
    let mut cum = 0.0;
    let mut last = 0.0;
    for &(lat, bits, c) in sorted {
        if class.is_some_and(|k| k != c) || bits <= 0.0 {
            continue;
        }
        cum += bits;
        last = lat;
        if cum >= target {
            return lat;
        }
    }
    last
}

/// Advances the state by one tick under a configuration.
pub fn step<E: Exogenous + ?Sized>(model: &Model, exo: &E, st: &mut SimState, cfg: &Compiled, out: &mut TickOut) {
    let t = st.tick;
    let spec = &model.spec;
    let links = &spec.links;
    let sat_ms_cap = links.saturation_latency_ms;
    let burst = links.queue_burst_bits;
    let theta = links.ground_fill;
    let tick_s = model.tick_s;
    let tick_h = model.tick_h;
    let hour = model.hour_of(t);
    let rain = exo.rain_db(t);

    out.tick = t;
    out.offered = [0.0; 3];
    out.served = [0.0; 3];
    out.layer_kwh = [0.0; 4];
    out.region_kwh.iter_mut().for_each(|x| *x = 0.0);
    out.sla_violations = 0;
    out.class_violations = [0; 3];
    out.urllc_max_ms = 0.0;
    out.draws.clear();
    out.samples.clear();

    uav_step(model, st, cfg, out);

    // access: ground pool and satellite beam per zone
    let t_s = t as f64 * tick_s;
    for z in 0..model.zones {
        let d_bits = exo.demand(t, z);
        out.zone_offered[z] = d_bits;
        for c in 0..3 {
            out.offered[c] += d_bits[c];
        }
        let d = [d_bits[0] / tick_s, d_bits[1] / tick_s, d_bits[2] / tick_s];
        let cg = f64::from(cfg.macro_active[z]) * model.macro_cap[z]
            + f64::from(cfg.small_active[z]) * model.small_cap[z]
            + f64::from(out.hovering[z]) * model.uav_cap[z];

        // satellite selection
        let (best, best_el) = model.sky.zone_best(t, z);
        let mask = model.topo.min_elevation_deg;
        let g_unit = model.topo.zone_unit(z);
        let elevation_of = |s: u16| model.topo.orbits[s as usize].elevation_deg(g_unit, t_s);
        let mut chosen = (NO_SATELLITE, 0.0);
        if let Handover::Preferred(p) = cfg.handover[z] {
            let el = elevation_of(p);
            if el >= mask {
                chosen = (p, el);
            }
        }
        if chosen.0 == NO_SATELLITE {
            let cur = st.sat[z];
            if cur != NO_SATELLITE && cur != best {
                let el = elevation_of(cur);
                if el >= mask {
                    chosen = (cur, el);
                }
            }
            if chosen.0 == NO_SATELLITE && best != NO_SATELLITE {
                chosen = (best, best_el);
            }
        }
        st.sat[z] = chosen.0;
        let g = cfg.serving[z];
        let (cs, sat_ms) = if chosen.0 == NO_SATELLITE {
            (0.0, sat_ms_cap)
        } else {
            let isl = if model.sky.gateway_best(t, model.zones, g).0 == chosen.0 {
                0.0
            } else {
                links.isl_hop_latency_ms
            };
            (model.beam_capacity(chosen.1, rain[RAIN_KA]), 2.0 * model.slant_ms(chosen.1) + isl)
        };

        let mut rem = d;
        let mut rg1 = theta * cg;
        let mut rg2 = cg - rg1;
        let mut rs1 = theta * cs;
        let mut rs2 = cs - rs1;
        let mut ground = [0.0; 3];
        let mut sat = [0.0; 3];
        ground[URLLC] = take(&mut rem[URLLC], &mut rg1) + take(&mut rem[URLLC], &mut rg2);
        for c in [EMBB, MIOT] {
            ground[c] = take(&mut rem[c], &mut rg1);
            sat[c] = take(&mut rem[c], &mut rs1);
            ground[c] += take(&mut rem[c], &mut rg2);
            sat[c] += take(&mut rem[c], &mut rs2);
        }

        // transport to the serving gateway (ground share only)
        let ct = model.transport_capacity(z, g, rain[RAIN_MW]);
        let carried = priority_fill(ground, ct);
        let zs = &mut out.zone_scratch[z];
        zs.q_access = priority_queue(ground, cg, burst);
        zs.q_sat = priority_queue(sat, cs, burst);
        zs.q_transport = priority_queue(carried, ct, burst);
        zs.ground = carried;
        zs.sat = sat;
        zs.sat_ms = sat_ms;
        zs.ground_cap = cg;
        zs.sat_load = sat.iter().sum();
        zs.access_load = ground.iter().sum();

        // RAN and satellite-share energy
        let ground_load: f64 = ground.iter().sum();
        let pc = &spec.power_catalog;
        let zr = model.zone_region[z];
        let site_util = if cg > 0.0 { ground_load / cg } else { 0.0 };
        let ma = f64::from(cfg.macro_active[z]);
        let sa = f64::from(cfg.small_active[z]);
        let macro_w = ma * (pc.macro_cell.active_w + pc.macro_cell.load_slope_w_per_bps.unwrap_or(0.0) * site_util * model.macro_cap[z])
            + f64::from(cfg.macro_sleep[z]) * pc.macro_cell.micro_sleep_w;
        let small_w = sa * (pc.small_cell.active_w + pc.small_cell.load_slope_w_per_bps.unwrap_or(0.0) * site_util * model.small_cap[z])
            + f64::from(cfg.small_sleep[z]) * pc.small_cell.deep_sleep_w;
        out.draws.push(EnergyDraw {
            layer: Layer::Ran,
            region: zr,
            watts: macro_w,
        });
        out.draws.push(EnergyDraw {
            layer: Layer::Ran,
            region: zr,
            watts: small_w,
        });
        let sat_load = zs.sat_load;
        let beam_w = if chosen.0 == NO_SATELLITE {
            0.0
        } else if sat_load > 0.0 {
            pc.satellite_share.active_w + pc.satellite_share.load_slope_w_per_bps.unwrap_or(0.0) * sat_load
        } else {
            pc.satellite_share.deep_sleep_w
        };
        out.draws.push(EnergyDraw {
            layer: Layer::Satellite,
            region: model.gateway_region[g],
            watts: beam_w,
        });
    }

    // gateways
    for x in out.gw_in.iter_mut() {
        *x = [0.0; 3];
    }
    for z in 0..model.zones {
        let g = cfg.serving[z];
        let zs = &out.zone_scratch[z];
        for c in 0..3 {
            out.gw_in[g][c] += zs.ground[c] + zs.sat[c];
        }
    }
    for g in 0..model.gateways {
        let cap = model.topo.gateways[g].throughput_bps;
        let passed = priority_fill(out.gw_in[g], cap);
        for c in 0..3 {
            out.gw_frac[g][c] = if out.gw_in[g][c] > 0.0 { passed[c] / out.gw_in[g][c] } else { 1.0 };
        }
        out.gw_q[g] = priority_queue(passed, cap, burst);
        st.obs.gateway_util[g] = out.gw_in[g].iter().sum::<f64>() / cap;
    }

    // edge compute demand per host
    let e = &spec.edge;
    let spg = [e.servers_per_gbps.embb, e.servers_per_gbps.urllc, e.servers_per_gbps.miot];
    let live_share = if cfg.defer { 1.0 - e.deferrable_fraction } else { 1.0 };
    for x in out.host_need.iter_mut() {
        *x = [0.0; 3];
    }
    let mut deferred = 0.0;
    for z in 0..model.zones {
        let g = cfg.serving[z];
        let zs = &out.zone_scratch[z];
        for c in 0..3 {
            let host = match cfg.placement[c] {
                Placement::Local => g,
                Placement::Gateway(h) => h,
            };
            let bps = (zs.ground[c] + zs.sat[c]) * out.gw_frac[g][c];
            let mut need = bps / 1e9 * spg[c];
            if host != g {
                need *= 1.0 + e.remote_overhead;
            }
            if c == MIOT {
                deferred += need * (1.0 - live_share);
                need *= live_share;
            }
            out.host_need[host][c] += need;
        }
    }
    let drain_host = match cfg.placement[MIOT] {
        Placement::Local => model.default_host,
        Placement::Gateway(h) => h,
    };
    let tick_min = tick_s / 60.0;
    if deferred > 0.0 {
        match st.backlog.back_mut() {
            Some(b) if b.0 == hour => b.1 += deferred * tick_min,
            _ => st.backlog.push_back((hour, deferred * tick_min)),
        }
    }
    let mut forced = 0.0;
    while let Some(&(h0, w)) = st.backlog.front() {
        if hour >= h0 + e.max_defer_hours {
            forced += w;
            st.backlog.pop_front();
        } else {
            break;
        }
    }
    let pc = &spec.power_catalog;
    for h in 0..model.gateways {
        let installed = model.topo.gateways[h].compute_capacity;
        let passed = priority_fill(out.host_need[h], installed);
        for c in 0..3 {
            out.host_frac[h][c] = if out.host_need[h][c] > 0.0 {
                passed[c] / out.host_need[h][c]
            } else {
                1.0
            };
        }
        let live: f64 = passed.iter().sum();
        let hosting = cfg.full && (live > 0.0 || h == drain_host);
        let mut servers = if hosting {
            installed
        } else {
            (live / e.target_utilization).ceil().clamp(e.min_servers.min(installed), installed)
        };
        let rho = if servers > 0.0 { live / servers } else { 0.0 };
        out.host_ms[h] = if rho < 1.0 {
            (e.processing_ms / (1.0 - rho)).min(sat_ms_cap)
        } else {
            sat_ms_cap
        };
        if h == drain_host {
            let mut drained = forced / tick_min;
            if !cfg.defer && !st.backlog.is_empty() {
                let spare = if hosting {
                    (installed - live).max(0.0)
                } else {
                    (installed - servers).max(0.0)
                };
                let mut budget = spare * tick_min;
                while budget > 0.0 {
                    let Some(front) = st.backlog.front_mut() else { break };
                    let w = front.1.min(budget);
                    front.1 -= w;
                    budget -= w;
                    drained += w / tick_min;
                    if front.1 <= 1e-12 {
                        st.backlog.pop_front();
                    }
                }
            }
            if hosting {
                servers += (live + drained - installed).max(0.0);
            } else {
                servers += drained;
            }
        }
        out.draws.push(EnergyDraw {
            layer: Layer::Edge,
            region: model.gateway_region[h],
            watts: pc.gateway.active_w + servers * pc.edge_server.active_w,
        });
    }

    // delivered bits and latency samples
    let inter = e.inter_gateway_ms;
    let sla = &spec.sla;
    let thresholds = [sla.embb_served_fraction, sla.urllc_served_fraction, sla.miot_served_fraction];
    let mut class_bits = [0.0; 3];
    for z in 0..model.zones {
        let g = cfg.serving[z];
        let zs = &out.zone_scratch[z];
        let tp = model.transport(z, g).prop_ms;
        let mut served = [0.0; 3];
        let mut urllc_lat: f64 = 0.0;
        for c in 0..3 {
            let host = match cfg.placement[c] {
                Placement::Local => g,
                Placement::Gateway(h) => h,
            };
            let remote = if host != g { inter } else { 0.0 };
            let f = out.gw_frac[g][c] * out.host_frac[host][c];
            let gbits = zs.ground[c] * f * tick_s;
            let sbits = zs.sat[c] * f * tick_s;
            let edge_ms = out.host_ms[host] + remote;
            let gq = out.gw_q[g][c];
            if gbits > 0.0 {
                let lat = match (zs.q_access[c], zs.q_transport[c], gq) {
                    (Some(a), Some(b), Some(q)) => (model.access_ms[z] + a + tp + b + q + edge_ms).min(sat_ms_cap),
                    _ => sat_ms_cap,
                };
                out.samples.push((lat, gbits, c as u8));
                if c == URLLC {
                    urllc_lat = urllc_lat.max(lat);
                }
            }
            if sbits > 0.0 {
                let lat = match (zs.q_sat[c], gq) {
                    (Some(a), Some(q)) => (zs.sat_ms + a + q + edge_ms).min(sat_ms_cap),
                    _ => sat_ms_cap,
                };
                out.samples.push((lat, sbits, c as u8));
                if c == URLLC {
                    urllc_lat = urllc_lat.max(lat);
                }
            }
            served[c] = gbits + sbits;
            let offered = out.zone_offered[z][c];
            let dropped = (offered - served[c]).max(0.0);
            if dropped > 0.0 {
                out.samples.push((sat_ms_cap, dropped, c as u8));
            }
            class_bits[c] += offered.max(served[c]);
            out.served[c] += served[c];
        }
        out.zone_served[z] = served;
        out.urllc_max_ms = out.urllc_max_ms.max(urllc_lat);

        let mut mask = 0u8;
        for c in 0..3 {
            let offered = out.zone_offered[z][c];
            if offered > 0.0 {
                let frac = served[c] / offered;
                let late = c == URLLC && urllc_lat > sla.urllc_latency_ms;
                if frac < thresholds[c] || late {
                    mask |= 1 << c;
                    out.sla_violations += 1;
                    out.class_violations[c] += 1;
                }
            }
        }
        let off_total: f64 = out.zone_offered[z].iter().sum();
        let served_total: f64 = served.iter().sum();
        st.obs.zone_offered_bps[z] = off_total / tick_s;
        st.obs.zone_served_frac[z] = if off_total > 0.0 { served_total / off_total } else { 1.0 };
        st.obs.zone_ground_util[z] = if zs.ground_cap > 0.0 {
            (zs.access_load / zs.ground_cap).min(1.0)
        } else {
            1.0
        };
        st.obs.zone_ground_bps[z] = zs.access_load;
        st.obs.zone_sat_bps[z] = zs.sat_load;
        st.obs.zone_violations[z] = mask;
    }

    out.samples.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let total_bits: f64 = class_bits.iter().sum();
    for c in 0..3 {
        out.p95[c] = weighted_percentile(&out.samples, Some(c as u8), class_bits[c], 0.95);
    }
    out.p95_all = weighted_percentile(&out.samples, None, total_bits, 0.95);

    // energy ledger and emissions
    for d in &out.draws {
        let kwh = d.watts * tick_h / 1000.0;
        out.layer_kwh[d.layer as usize] += kwh;
        out.region_kwh[d.region] += kwh;
    }
    for r in 0..model.regions {
        let (i, s) = exo.carbon(t, r);
        out.intensity[r] = i;
        out.renewable[r] = s;
    }
    let (g, r) = crate::energy::emissions_for(&out.region_kwh, &out.intensity, &out.renewable);
    out.emissions_g = g;
    out.renewable_kwh = r;

    st.obs.p95_all = out.p95_all;
    st.obs.rain = rain[RAIN_KA] > 0.0 || rain[RAIN_MW] > 0.0;
    st.tick += 1;
}

fn uav_step(model: &Model, st: &mut SimState, cfg: &Compiled, out: &mut TickOut) {
    out.hovering.iter_mut().for_each(|h| *h = 0);
    if st.uavs.is_empty() {
        return;
    }
    let cap = model.uav_capacity_wh;
    let topo = &model.topo;

    // reconcile commitments with the configuration
    for z in 0..model.zones {
        let need = cfg.uav_need[z] as usize;
        out.uav_scratch.clear();
        for (i, u) in st.uavs.iter().enumerate() {
            if u.committed_zone() == Some(z) {
                out.uav_scratch.push(i);
            }
        }
        if out.uav_scratch.len() > need {
            let uavs = &st.uavs;
            out.uav_scratch
                .sort_by(|&a, &b| uavs[a].battery_wh.total_cmp(&uavs[b].battery_wh).then(a.cmp(&b)));
            for k in 0..out.uav_scratch.len() - need {
                let i = out.uav_scratch[k];
                let pad = topo.nearest_pad(st.uavs[i].pos);
                st.uavs[i].task = UavTask::Returning { pad: pad as u16 };
            }
        } else {
            for _ in out.uav_scratch.len()..need {
                let centroid = topo.zones[z].centroid;
                let mut pick: Option<(usize, f64, f64)> = None;
                for (i, u) in st.uavs.iter().enumerate() {
                    if !matches!(u.task, UavTask::Idle { .. }) || u.battery_wh < model.dispatch_need_wh(u.pos, z) {
                        continue;
                    }
                    let d = distance_km(u.pos, centroid);
                    let better = match pick {
                        None => true,
                        Some((_, b, pd)) => u.battery_wh > b || (u.battery_wh == b && d < pd),
                    };
                    if better {
                        pick = Some((i, u.battery_wh, d));
                    }
                }
                match pick {
                    Some((i, _, _)) => st.uavs[i].task = UavTask::Outbound { zone: z as u16 },
                    None => break,
                }
            }
        }
    }

    // reserve-triggered returns
    let speed = model.spec.uavs.cruise_speed_kmh;
    let per_tick_max = model.hover_w.max(model.cruise_w) * model.tick_h;
    let step_km = model.uav_speed_km_per_tick();
    let limit = (model.spec.uavs.endurance_h / model.tick_h).floor() as u32;
    for u in st.uavs.iter_mut() {
        if u.committed_zone().is_some() {
            let pad = topo.nearest_pad(u.pos);
            let d = distance_km(u.pos, topo.pads[pad].position);
            let home = d / speed * model.cruise_w + model.reserve_wh();
            let ticks_home = (d / step_km).ceil() as u32;
            if u.battery_wh - per_tick_max < home || u.airborne_ticks + 1 + ticks_home > limit {
                u.task = UavTask::Returning { pad: pad as u16 };
            }
        }
    }

    // movement and battery drain
    for u in st.uavs.iter_mut() {
        let target = match u.task {
            UavTask::Outbound { zone } => Some(topo.zones[zone as usize].centroid),
            UavTask::Returning { pad } => Some(topo.pads[pad as usize].position),
            _ => None,
        };
        match u.task {
            UavTask::Idle { .. } => {
                u.airborne_ticks = 0;
                continue;
            }
            UavTask::Serving { .. } => u.battery_wh -= model.hover_w * model.tick_h,
            _ => u.battery_wh -= model.cruise_w * model.tick_h,
        }
        u.airborne_ticks += 1;
        if let Some(tg) = target {
            let d = distance_km(u.pos, tg);
            if d <= step_km {
                u.pos = tg;
                u.task = match u.task {
                    UavTask::Outbound { zone } => UavTask::Serving { zone },
                    UavTask::Returning { pad } => {
                        u.airborne_ticks = 0;
                        UavTask::Idle { pad }
                    }
                    other => other,
                };
            } else {
                let f = step_km / d;
                u.pos = [u.pos[0] + (tg[0] - u.pos[0]) * f, u.pos[1] + (tg[1] - u.pos[1]) * f];
            }
        }
        assert!(u.battery_wh >= -1e-9, "UAV battery exhausted in flight");
    }

    // battery swaps: one per pad per tick, lowest charge first
    for p in 0..topo.pads.len() {
        let mut pick: Option<usize> = None;
        for (i, u) in st.uavs.iter().enumerate() {
            if u.task == (UavTask::Idle { pad: p as u16 })
                && u.battery_wh < cap - 1e-9
                && pick.is_none_or(|j| u.battery_wh < st.uavs[j].battery_wh)
            {
                pick = Some(i);
            }
        }
        if let Some(i) = pick {
            let wh = cap - st.uavs[i].battery_wh;
            st.uavs[i].battery_wh = cap;
            out.draws.push(EnergyDraw {
                layer: Layer::Uav,
                region: topo.pads[p].region,
                watts: wh / model.tick_h,
            });
        }
    }

    for u in &st.uavs {
        if let UavTask::Serving { zone } = u.task {
            out.hovering[zone as usize] += 1;
        }
    }
}

/// Running totals over a span of ticks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Accum {
    pub ticks: u64,
    pub emissions_g: f64,
    pub renewable_kwh: f64,
    pub layer_kwh: [f64; 4],
    pub offered: [f64; 3],
    pub served: [f64; 3],
    pub sla_violations: u64,
    pub p95_sum: f64,
    pub p95_class_sum: [f64; 3],
    pub urllc_p95_max: f64,
    /// Hours whose served fraction or URLLC latency missed the SLA.
    pub shortfall_hours: u32,
}

impl Accum {
    pub fn add(&mut self, o: &TickOut) {
        self.ticks += 1;
        self.emissions_g += o.emissions_g;
        self.renewable_kwh += o.renewable_kwh;
        for i in 0..4 {
            self.layer_kwh[i] += o.layer_kwh[i];
        }
        for c in 0..3 {
            self.offered[c] += o.offered[c];
            self.served[c] += o.served[c];
            self.p95_class_sum[c] += o.p95[c];
        }
        self.sla_violations += u64::from(o.sla_violations);
        self.p95_sum += o.p95_all;
        self.urllc_p95_max = self.urllc_p95_max.max(o.p95[URLLC]);
    }

    pub fn total_kwh(&self) -> f64 {
        self.layer_kwh.iter().sum()
    }

    pub fn served_fraction(&self) -> f64 {
        let off: f64 = self.offered.iter().sum();
        if off > 0.0 {
            self.served.iter().sum::<f64>() / off
        } else {
            1.0
        }
    }

    pub fn mean_p95(&self) -> f64 {
        if self.ticks > 0 {
            self.p95_sum / self.ticks as f64
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_paper_scenario;
    use std::sync::OnceLock;

    pub(crate) fn model() -> &'static Model {
        static M: OnceLock<Model> = OnceLock::new();
        M.get_or_init(|| Model::new(&default_paper_scenario()).unwrap())
    }

    struct Flat {
        bits: [f64; 3],
        rain: [f64; 2],
    }

    impl Exogenous for Flat {
        fn demand(&self, _: u64, _: usize) -> [f64; 3] {
            self.bits
        }
        fn rain_db(&self, _: u64) -> [f64; 2] {
            self.rain
        }
        fn carbon(&self, _: u64, region: usize) -> (f64, f64) {
            if region == 0 {
                (200.0, 0.5)
            } else {
                (400.0, 0.1)
            }
        }
    }

    #[test]
    fn priority_fill_serves_urllc_first() {
        let out = priority_fill([5.0, 3.0, 5.0], 6.0);
        assert_eq!(out, [3.0, 3.0, 0.0]);
    }

    #[test]
    fn percentile_of_two_samples() {
        let s = vec![(1.0, 90.0, 0), (10.0, 10.0, 0)];
        assert_eq!(weighted_percentile(&s, None, 100.0, 0.95), 10.0);
        assert_eq!(weighted_percentile(&s, None, 100.0, 0.90), 1.0);
    }

    #[test]
    fn served_never_exceeds_offered_and_ledger_balances() {
        let m = model();
        let cfg = Compiled::new(m, &HourConfig::baseline(&m.topo));
        let mut st = SimState::initial(m);
        let mut out = TickOut::new(m);
        let exo = Flat {
            bits: [3e9 * 60.0, 2e8 * 60.0, 5e8 * 60.0],
            rain: [0.0, 0.0],
        };
        for _ in 0..30 {
            step(m, &exo, &mut st, &cfg, &mut out);
            for c in 0..3 {
                assert!(out.served[c] <= out.offered[c] * (1.0 + 1e-12));
            }
            let layers: f64 = out.layer_kwh.iter().sum();
            let regions: f64 = out.region_kwh.iter().sum();
            let elements: f64 = out.draws.iter().map(|d| d.watts * m.tick_h / 1000.0).sum();
            assert!((layers - elements).abs() <= 1e-9 * elements);
            assert!((regions - elements).abs() <= 1e-9 * elements);
            assert!(out.renewable_kwh <= layers);
        }
    }

    #[test]
    fn light_load_is_fully_served() {
        let m = model();
        let cfg = Compiled::new(m, &HourConfig::baseline(&m.topo));
        let mut st = SimState::initial(m);
        let mut out = TickOut::new(m);
        let exo = Flat {
            bits: [1e7 * 60.0, 1e6 * 60.0, 1e6 * 60.0],
            rain: [0.0, 0.0],
        };
        step(m, &exo, &mut st, &cfg, &mut out);
        for c in 0..3 {
            assert!((out.served[c] - out.offered[c]).abs() <= 1e-6 * out.offered[c]);
        }
        assert_eq!(out.sla_violations, 0);
    }

    #[test]
    fn rain_degrades_satellite_served_zone() {
        let m = model();
        let mut hc = HourConfig::baseline(&m.topo);
        // rural zone 6 with half its macros asleep spills onto the satellite
        for (i, mode) in hc.macro_power_mode.iter_mut().enumerate() {
            if m.macro_zone[i] == 6 {
                *mode = SleepMode::MicroSleep;
            }
        }
        hc.macro_power_mode[m.macro_zone.iter().position(|&z| z == 6).unwrap()] = SleepMode::Active;
        let cfg = Compiled::new(m, &hc);
        let bits = [0.3e9 * 60.0, 0.05e9 * 60.0, 0.3e9 * 60.0];
        let run = |rain: f64| {
            let mut st = SimState::initial(m);
            let mut out = TickOut::new(m);
            step(m, &Flat { bits, rain: [rain, rain] }, &mut st, &cfg, &mut out);
            (out.zone_served[6], out.p95_all, st.obs.zone_sat_bps[6])
        };
        let (clear, p_clear, sat) = run(0.0);
        let (wet, p_wet, _) = run(15.0);
        assert!(sat > 0.0);
        assert!(wet.iter().sum::<f64>() < clear.iter().sum::<f64>());
        assert!(p_wet >= p_clear);
    }

    #[test]
    fn uav_deactivation_returns_home() {
        let m = model();
        let mut hc = HourConfig::baseline(&m.topo);
        hc.uav_slots = vec![6];
        let on = Compiled::new(m, &hc);
        hc.uav_slots.clear();
        let off = Compiled::new(m, &hc);
        let exo = Flat {
            bits: [1e8 * 60.0, 1e6 * 60.0, 1e6 * 60.0],
            rain: [0.0, 0.0],
        };
        let mut st = SimState::initial(m);
        let mut out = TickOut::new(m);
        for _ in 0..90 {
            step(m, &exo, &mut st, &on, &mut out);
        }
        assert_eq!(out.hovering()[6], 1);
        let i = st.uavs.iter().position(|u| u.mode() == UavMode::Hover).unwrap();
        step(m, &exo, &mut st, &off, &mut out);
        assert_eq!(out.hovering()[6], 0);
        assert_eq!(st.uavs[i].mode(), UavMode::Cruise);
        for _ in 0..120 {
            step(m, &exo, &mut st, &off, &mut out);
        }
        assert_eq!(st.uavs[i].mode(), UavMode::Grounded);
        assert_eq!(st.uavs[i].battery_wh, m.uav_capacity_wh);
    }

    #[test]
    fn uavs_never_outlive_their_endurance() {
        let m = model();
        let mut hc = HourConfig::baseline(&m.topo);
        hc.uav_slots = (0..24).map(|i| i % m.zones).collect();
        let cfg = Compiled::new(m, &hc);
        let exo = Flat {
            bits: [1e8 * 60.0, 1e6 * 60.0, 1e6 * 60.0],
            rain: [0.0, 0.0],
        };
        let mut st = SimState::initial(m);
        let mut out = TickOut::new(m);
        let limit = (m.spec.uavs.endurance_h * 60.0) as u32;
        let mut swaps = 0.0;
        for _ in 0..(12 * 60) {
            step(m, &exo, &mut st, &cfg, &mut out);
            swaps += out.layer_kwh[Layer::Uav as usize];
            for u in &st.uavs {
                assert!(u.airborne_ticks <= limit);
                assert!(u.battery_wh >= 0.0 && u.battery_wh <= m.uav_capacity_wh);
            }
        }
        assert!(swaps > 0.0);
    }
}
