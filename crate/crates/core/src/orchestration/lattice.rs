//! The discrete knob lattice searched by the planners.
//!
//! A candidate picks one gateway mode, one UAV level, one sleep level and
//! one edge mode; [`Lattice::config`] expands it into a full [`HourConfig`].

use serde::{Deserialize, Serialize};

use crate::energy::SleepMode;
use crate::engine::Model;
use crate::error::{Error, Result};
use crate::orchestration::{Handover, HourConfig, Placement, Provisioning};
use crate::topology::{distance_km, SiteKind};

/// Radius within which the balanced mode may move a zone off its nearest gateway.
const BALANCE_RADIUS_KM: f64 = 80.0;
/// Throughput share a region-first gateway may be loaded to before spilling.
const REGION_FILL: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayMode {
    Nearest,
    /// Greedy least-utilization assignment by nominal load.
    Balanced,
    /// Prefer gateways of one region while they have headroom.
    RegionFirst(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    Local,
    /// Analytics consolidated at the largest gateway of a region.
    RegionHub(usize),
    /// Local placement with batch analytics queued for later.
    Defer,
}

/// Indices into the lattice axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Candidate {
    pub gateway: usize,
    pub uav: usize,
    pub sleep: usize,
    pub edge: usize,
}

/// Precomputed expansions of every lattice axis for one model.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub gateway_modes: Vec<GatewayMode>,
    pub uav_levels: Vec<f64>,
    pub sleep_levels: Vec<f64>,
    pub edge_modes: Vec<EdgeMode>,
    serving: Vec<Vec<usize>>,
    uav_slots: Vec<Vec<usize>>,
    sleep_modes: Vec<(Vec<SleepMode>, Vec<SleepMode>)>,
    placements: Vec<([Placement; 3], bool)>,
    zones: usize,
}

impl Lattice {
    pub fn new(model: &Model) -> Result<Self> {
        let spec = &model.spec.orchestration.lattice;
        let n_regions = model.regions;
        for m in &spec.gateway_modes {
            if let GatewayMode::RegionFirst(r) = m {
                if *r >= n_regions {
                    return Err(Error::Config(format!("gateway mode references region {r}")));
                }
            }
        }
        for m in &spec.edge_modes {
            if let EdgeMode::RegionHub(r) = m {
                if *r >= n_regions {
                    return Err(Error::Config(format!("edge mode references region {r}")));
                }
            }
        }
        if spec.gateway_modes.is_empty() || spec.uav_levels.is_empty() || spec.sleep_levels.is_empty() || spec.edge_modes.is_empty() {
            return Err(Error::Config("every lattice axis needs at least one level".into()));
        }
        Ok(Lattice {
            serving: spec.gateway_modes.iter().map(|&m| serving_for(model, m)).collect(),
            uav_slots: spec.uav_levels.iter().map(|&f| uav_slots_for(model, f)).collect(),
            sleep_modes: spec
                .sleep_levels
                .iter()
                .map(|&s| sleep_modes_for(model, s, spec.macro_sleep_ratio))
                .collect(),
            placements: spec
                .edge_modes
                .iter()
                .map(|&m| match m {
                    EdgeMode::Local => ([Placement::Local; 3], false),
                    EdgeMode::RegionHub(r) => ([Placement::Local, Placement::Local, Placement::Gateway(model.region_hub[r])], false),
                    EdgeMode::Defer => ([Placement::Local; 3], true),
                })
                .collect(),
            gateway_modes: spec.gateway_modes.clone(),
            uav_levels: spec.uav_levels.clone(),
            sleep_levels: spec.sleep_levels.clone(),
            edge_modes: spec.edge_modes.clone(),
            zones: model.zones,
        })
    }

    /// All candidates in lexicographic index order.
    pub fn candidates(&self, allow_defer: bool) -> Vec<Candidate> {
        let mut out = Vec::new();
        for gateway in 0..self.gateway_modes.len() {
            for uav in 0..self.uav_levels.len() {
                for sleep in 0..self.sleep_levels.len() {
                    for edge in 0..self.edge_modes.len() {
                        if !allow_defer && self.edge_modes[edge] == EdgeMode::Defer {
                            continue;
                        }
                        out.push(Candidate { gateway, uav, sleep, edge });
                    }
                }
            }
        }
        out
    }

    pub fn config(&self, c: Candidate) -> HourConfig {
        let (small, macros) = self.sleep_modes[c.sleep].clone();
        let (placement, defer) = self.placements[c.edge];
        HourConfig {
            serving_gateway: self.serving[c.gateway].clone(),
            uav_slots: self.uav_slots[c.uav].clone(),
            small_cell_sleep: small,
            macro_power_mode: macros,
            edge_placement: placement,
            defer_analytics: defer,
            provisioning: Provisioning::Autoscale,
            satellite_handover: vec![Handover::Auto; self.zones],
        }
    }

    /// The candidate with every site awake, the most UAVs and local services.
    pub fn qos_max(&self) -> Candidate {
        let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |b, (i, x)| if *x > v[b] { i } else { b });
        let argmin = |v: &[f64]| v.iter().enumerate().fold(0, |b, (i, x)| if *x < v[b] { i } else { b });
        Candidate {
            gateway: self.gateway_modes.iter().position(|m| *m == GatewayMode::Nearest).unwrap_or(0),
            uav: argmax(&self.uav_levels),
            sleep: argmin(&self.sleep_levels),
            edge: self.edge_modes.iter().position(|m| *m == EdgeMode::Local).unwrap_or(0),
        }
    }
}

/// Fixed configuration of the static baseline: nearest gateways, everything
/// awake, a fixed UAV share and all services pinned to the largest hub with
/// every server powered.
pub fn static_config(model: &Model) -> HourConfig {
    let mut cfg = HourConfig::baseline(&model.topo);
    cfg.uav_slots = uav_slots_for(model, model.spec.orchestration.static_uav_fraction);
    cfg.edge_placement = [Placement::Gateway(model.default_host); 3];
    cfg.provisioning = Provisioning::Full;
    cfg
}

/// Serving gateway per zone under a gateway mode.
pub fn serving_for(model: &Model, mode: GatewayMode) -> Vec<usize> {
    let topo = &model.topo;
    let nearest: Vec<usize> = (0..model.zones).map(|z| topo.gateways_by_distance(z)[0]).collect();
    let mut order: Vec<usize> = (0..model.zones).collect();
    order.sort_by(|&a, &b| model.nominal_load_bps[b].total_cmp(&model.nominal_load_bps[a]).then(a.cmp(&b)));
    let mut load = vec![0.0; model.gateways];
    let mut out = nearest.clone();
    match mode {
        GatewayMode::Nearest => {}
        GatewayMode::Balanced => {
            for &z in &order {
                let c = topo.zones[z].centroid;
                let d0 = distance_km(c, topo.gateways[nearest[z]].position);
                let mut best = nearest[z];
                let mut best_u = f64::INFINITY;
                for g in topo.gateways_by_distance(z) {
                    if distance_km(c, topo.gateways[g].position) > d0.max(BALANCE_RADIUS_KM) {
                        break;
                    }
                    let u = (load[g] + model.nominal_load_bps[z]) / topo.gateways[g].throughput_bps;
                    if u < best_u {
                        best_u = u;
                        best = g;
                    }
                }
                load[best] += model.nominal_load_bps[z];
                out[z] = best;
            }
        }
        GatewayMode::RegionFirst(r) => {
            for &z in &order {
                let by_dist = topo.gateways_by_distance(z);
                let fits = |g: usize, load: &[f64]| load[g] + model.nominal_load_bps[z] <= REGION_FILL * topo.gateways[g].throughput_bps;
                let pick = by_dist
                    .iter()
                    .copied()
                    .find(|&g| topo.gateways[g].region == r && fits(g, &load))
                    .or_else(|| by_dist.iter().copied().find(|&g| fits(g, &load)))
                    .unwrap_or(nearest[z]);
                load[pick] += model.nominal_load_bps[z];
                out[z] = pick;
            }
        }
    }
    out
}

/// Zones of `round(fraction * fleet)` UAV slots, allotted by highest-averages
/// on each zone's peak load relative to its ground capacity.
pub fn uav_slots_for(model: &Model, fraction: f64) -> Vec<usize> {
    let fleet = model.topo.uavs.len();
    let n = ((fraction.clamp(0.0, 1.0) * fleet as f64).round() as usize).min(fleet);
    let weight: Vec<f64> = (0..model.zones)
        .map(|z| {
            let cap = model.full_ground_capacity(z);
            if cap > 0.0 {
                model.nominal_load_bps[z] / cap
            } else {
                f64::MAX
            }
        })
        .collect();
    let mut given = vec![0usize; model.zones];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best = 0;
        let mut best_q = f64::NEG_INFINITY;
        for z in 0..model.zones {
            let q = weight[z] / (given[z] + 1) as f64;
            if q > best_q {
                best_q = q;
                best = z;
            }
        }
        given[best] += 1;
        out.push(best);
    }
    out.sort_unstable();
    out
}

/// Small-cell and macro modes for a sleep level: the lowest-indexed sites of
/// each zone sleep first.
pub fn sleep_modes_for(model: &Model, level: f64, macro_ratio: f64) -> (Vec<SleepMode>, Vec<SleepMode>) {
    let topo = &model.topo;
    let mut ordinal = vec![0usize; topo.sites.len()];
    let (mut ns, mut nm) = (0, 0);
    for (i, s) in topo.sites.iter().enumerate() {
        if s.kind == SiteKind::Small {
            ordinal[i] = ns;
            ns += 1;
        } else {
            ordinal[i] = nm;
            nm += 1;
        }
    }
    let mut small = vec![SleepMode::Active; ns];
    let mut macros = vec![SleepMode::Active; nm];
    for (m, s) in &topo.zone_sites {
        let k_small = (level * s.len() as f64).round() as usize;
        for &i in s.iter().take(k_small) {
            small[ordinal[i]] = SleepMode::DeepSleep;
        }
        let k_macro = ((level * macro_ratio * m.len() as f64).round() as usize).min(m.len().saturating_sub(1));
        for &i in m.iter().take(k_macro) {
            macros[ordinal[i]] = SleepMode::MicroSleep;
        }
    }
    (small, macros)
}
