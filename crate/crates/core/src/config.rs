//! Scenario description: topology counts, power catalog, traffic profiles,
//! weather events, carbon source and orchestration parameters.
//!
//! A scenario is plain data. [`default_paper_scenario`] builds the reference
//! metropolitan experiment; [`load_scenario`] reads the same structure from
//! JSON (unknown keys are rejected) and runs [`validate`] on it.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::environment::RainEvent;
use crate::error::{Error, Result};
use crate::linkmodel::{Band, PathEnv};
use crate::orchestration::lattice::{EdgeMode, GatewayMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneClass {
    Urban,
    Suburban,
    Rural,
}

impl ZoneClass {
    pub fn path_env(self) -> PathEnv {
        match self {
            ZoneClass::Urban => PathEnv::Urban,
            ZoneClass::Suburban => PathEnv::Suburban,
            ZoneClass::Rural => PathEnv::Rural,
        }
    }
}

/// A value that differs by zone class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerZoneClass<T> {
    pub urban: T,
    pub suburban: T,
    pub rural: T,
}

impl<T: Copy> PerZoneClass<T> {
    pub fn get(&self, class: ZoneClass) -> T {
        match class {
            ZoneClass::Urban => self.urban,
            ZoneClass::Suburban => self.suburban,
            ZoneClass::Rural => self.rural,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoAnchor {
    /// Latitude of the planar frame's anchor point.
    pub center_lat_deg: f64,
    pub center_lon_deg: f64,
    /// Planar coordinates (km) of the anchor point.
    pub center_km: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSpec {
    pub id: String,
    pub class: ZoneClass,
    pub region: String,
    pub centroid_km: [f64; 2],
    pub macro_sites: u32,
    pub small_cells: u32,
    /// Industrial zones carry the bulk of URLLC demand.
    pub industrial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSpec {
    pub planes: u32,
    pub sats_per_plane: u32,
    pub total: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// RAAN spread across planes (360 for a global Walker-delta, 180 for a star).
    pub raan_spread_deg: f64,
    /// Walker phasing factor F.
    pub phasing: u32,
    pub min_elevation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RanSpec {
    pub macro_count: u32,
    pub small_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PadSpec {
    pub position_km: [f64; 2],
    pub region: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavSpec {
    pub count: u32,
    pub endurance_h: f64,
    pub coverage_km: f64,
    pub cruise_speed_kmh: f64,
    /// Battery fraction kept in reserve on top of the energy needed to fly home.
    pub reserve_fraction: f64,
    pub swap_pads: Vec<PadSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewaySite {
    pub id: String,
    pub region: String,
    pub position_km: [f64; 2],
    /// Installed edge servers.
    pub compute_capacity: f64,
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewaySpec {
    pub count: u32,
    pub sites: Vec<GatewaySite>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbbProfile {
    pub peak_hour: f64,
    pub trough_hour: f64,
    pub peak_bps: PerZoneClass<f64>,
    pub peak_to_trough: f64,
    /// Fraction of suburban demand that commutes into urban zones during work hours.
    pub commuter_shift: f64,
    /// Relative half-width of the uniform per-minute noise.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrllcProfile {
    pub industrial_bps: f64,
    pub other_bps: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiotProfile {
    pub mean_bps: PerZoneClass<f64>,
    /// Poisson rate of report batches per zone and minute.
    pub bursts_per_minute: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeSpec {
    pub start_hour: f64,
    pub end_hour: f64,
    pub multiplier: f64,
    pub zone_class: ZoneClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficProfiles {
    pub embb: EmbbProfile,
    pub urllc: UrllcProfile,
    pub miot: MiotProfile,
    pub surge: Option<SurgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionProfile {
    pub region: String,
    /// Mean renewable share for each hour of the day.
    pub hourly_renewable: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCarbon {
    pub base_intensity: f64,
    pub floor_intensity: f64,
    /// Relative half-width of the bounded multiplicative noise on renewable share.
    pub noise: f64,
    pub profiles: Vec<RegionProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CarbonSource {
    File { path: String, regions: Vec<String> },
    Synthetic(SyntheticCarbon),
}

impl CarbonSource {
    pub fn regions(&self) -> Vec<&str> {
        match self {
            CarbonSource::File { regions, .. } => regions.iter().map(String::as_str).collect(),
            CarbonSource::Synthetic(s) => s.profiles.iter().map(|p| p.region.as_str()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Macro,
    Small,
    EdgeServer,
    Uav,
    SatelliteShare,
    Gateway,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ElementKind::Macro => "macro",
            ElementKind::Small => "small",
            ElementKind::EdgeServer => "edge_server",
            ElementKind::Uav => "uav",
            ElementKind::SatelliteShare => "satellite_share",
            ElementKind::Gateway => "gateway",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerProfile {
    pub element_kind: ElementKind,
    pub active_w: f64,
    pub micro_sleep_w: f64,
    pub deep_sleep_w: f64,
    pub off_w: f64,
    pub load_slope_w_per_bps: Option<f64>,
    pub uav_cruise_w: Option<f64>,
    pub uav_hover_w: Option<f64>,
}

impl PowerProfile {
    fn simple(kind: ElementKind, active_w: f64, slope: Option<f64>) -> Self {
        PowerProfile {
            element_kind: kind,
            active_w,
            micro_sleep_w: 0.30 * active_w,
            deep_sleep_w: 0.05 * active_w,
            off_w: 0.0,
            load_slope_w_per_bps: slope,
            uav_cruise_w: None,
            uav_hover_w: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerCatalog {
    pub macro_cell: PowerProfile,
    pub small_cell: PowerProfile,
    pub edge_server: PowerProfile,
    pub uav: PowerProfile,
    pub satellite_share: PowerProfile,
    pub gateway: PowerProfile,
}

impl PowerCatalog {
    pub fn profiles(&self) -> [(&'static str, &PowerProfile, ElementKind); 6] {
        [
            ("macro_cell", &self.macro_cell, ElementKind::Macro),
            ("small_cell", &self.small_cell, ElementKind::Small),
            ("edge_server", &self.edge_server, ElementKind::EdgeServer),
            ("uav", &self.uav, ElementKind::Uav),
            ("satellite_share", &self.satellite_share, ElementKind::SatelliteShare),
            ("gateway", &self.gateway, ElementKind::Gateway),
        ]
    }
}

/// Radio parameters for one access or transport technology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSpec {
    pub band: Band,
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    /// Effective noise floor, antenna gains folded in.
    pub noise_dbm: f64,
    /// Representative link distance per zone class (ignored where geometry decides).
    pub distance_km: PerZoneClass<f64>,
    /// Propagation environment; `None` uses the zone's class.
    pub env: Option<PathEnv>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossExponents {
    pub urban: f64,
    pub suburban: f64,
    pub rural: f64,
    pub air_ground: f64,
    pub space_ground: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub macro_cell: RadioSpec,
    pub small_cell: RadioSpec,
    pub uav: RadioSpec,
    pub satellite: RadioSpec,
    pub microwave: RadioSpec,
    pub fiber_capacity_bps: f64,
    pub fiber_km_per_ms: f64,
    pub exponents: PathLossExponents,
    pub max_spectral_efficiency: f64,
    /// Burst size K (bits) in the queueing term K / (capacity - load).
    pub queue_burst_bits: f64,
    pub saturation_latency_ms: f64,
    pub access_latency_ms: f64,
    /// Utilization of the ground pool above which traffic spills to the satellite beam.
    pub ground_fill: f64,
    pub isl_hop_latency_ms: f64,
    pub isl_capacity_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassValues {
    pub embb: f64,
    pub urllc: f64,
    pub miot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    /// Server load generated per Gb/s of served traffic, by class.
    pub servers_per_gbps: ClassValues,
    pub target_utilization: f64,
    /// Extra compute for a service hosted away from the serving gateway.
    pub remote_overhead: f64,
    pub processing_ms: f64,
    pub inter_gateway_ms: f64,
    pub min_servers: f64,
    /// Share of analytics work that is batch and may be deferred.
    pub deferrable_fraction: f64,
    /// Deferred work older than this is processed immediately.
    pub max_defer_hours: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlaSpec {
    pub urllc_latency_ms: f64,
    pub embb_served_fraction: f64,
    pub miot_served_fraction: f64,
    pub urllc_served_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub gateway_modes: Vec<GatewayMode>,
    pub uav_levels: Vec<f64>,
    pub sleep_levels: Vec<f64>,
    pub edge_modes: Vec<EdgeMode>,
    /// Macro micro-sleep fraction as a multiple of the small-cell sleep level.
    pub macro_sleep_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlConfig {
    pub gamma: f64,
    pub actor_step: f64,
    pub critic_step: f64,
    pub sla_penalty: f64,
    pub exploration_start: f64,
    pub exploration_end: f64,
    pub episodes: u32,
    pub episode_days: u32,
    pub randomize_events: bool,
    /// Leading episodes in which only the critic learns.
    #[serde(default)]
    pub critic_warmup_episodes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrchestrationSpec {
    pub beam_width: usize,
    pub horizon_hours: usize,
    /// Planned URLLC latency must stay below this fraction of the target.
    pub latency_margin: f64,
    pub static_uav_fraction: f64,
    pub forecast_blend: f64,
    pub forecast_ewma_alpha: f64,
    pub recovery_threshold: f64,
    pub recovery_hold_minutes: u32,
    pub lattice: LatticeSpec,
    pub rl: RlConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub days: u32,
    pub epoch_minutes: u32,
    pub decision_interval_hours: u32,
    pub geo: GeoAnchor,
    pub regions: Vec<String>,
    pub zones: Vec<ZoneSpec>,
    pub constellation: ConstellationSpec,
    pub ran: RanSpec,
    pub uavs: UavSpec,
    pub gateways: GatewaySpec,
    pub traffic_profiles: TrafficProfiles,
    pub rain_events: Vec<RainEvent>,
    pub carbon_source: CarbonSource,
    pub power_catalog: PowerCatalog,
    pub links: LinkSpec,
    pub edge: EdgeSpec,
    pub sla: SlaSpec,
    pub orchestration: OrchestrationSpec,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn horizon_hours(&self) -> u32 {
        self.days * 24
    }

    pub fn ticks_per_hour(&self) -> u32 {
        60 / self.epoch_minutes
    }

    pub fn total_ticks(&self) -> u64 {
        u64::from(self.horizon_hours()) * u64::from(self.ticks_per_hour())
    }

    pub fn tick_hours(&self) -> f64 {
        f64::from(self.epoch_minutes) / 60.0
    }

    pub fn region_index(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// One broken invariant, named by its field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: "<inline>".into(),
        message: e.to_string(),
    })?;
    let violations = validate(&spec);
    if violations.is_empty() {
        Ok(spec)
    } else {
        Err(Error::Validation { violations })
    }
}

pub fn validate(spec: &ScenarioSpec) -> Vec<Violation> {
    let mut v = Vec::new();
    if spec.days < 1 {
        v.push(Violation::new("days", "must be at least 1"));
    }
    if spec.epoch_minutes == 0 || 60 % spec.epoch_minutes != 0 {
        v.push(Violation::new("epoch_minutes", "must divide 60"));
    }
    if spec.decision_interval_hours < 1 {
        v.push(Violation::new("decision_interval_hours", "must be at least 1"));
    }

    let c = &spec.constellation;
    if c.planes < 1 || c.sats_per_plane < 1 {
        v.push(Violation::new("constellation", "planes and sats_per_plane must be positive"));
    } else if c.planes * c.sats_per_plane != c.total {
        v.push(Violation::new(
            "constellation.total",
            format!("{} planes x {} per plane != {}", c.planes, c.sats_per_plane, c.total),
        ));
    }
    if !(c.altitude_km > 0.0) {
        v.push(Violation::new("constellation.altitude_km", "must be positive"));
    }
    if !(0.0..90.0).contains(&c.min_elevation_deg) {
        v.push(Violation::new("constellation.min_elevation_deg", "must lie in [0, 90)"));
    }

    if spec.regions.is_empty() {
        v.push(Violation::new("regions", "at least one region required"));
    }
    let carbon_regions = spec.carbon_source.regions();
    for r in &spec.regions {
        let n = carbon_regions.iter().filter(|c| **c == r).count();
        if n != 1 {
            v.push(Violation::new(
                format!("carbon_source.{r}"),
                format!("region must appear exactly once in the carbon source (found {n})"),
            ));
        }
    }
    if spec.zones.is_empty() {
        v.push(Violation::new("zones", "at least one zone required"));
    }
    for z in &spec.zones {
        let known = spec.regions.contains(&z.region);
        let in_carbon = carbon_regions.iter().filter(|c| **c == z.region).count() == 1;
        if !known || !in_carbon {
            v.push(Violation::new(
                format!("zones.{}.region", z.id),
                format!("zone '{}' does not map to exactly one carbon region ('{}')", z.id, z.region),
            ));
        }
        if z.class == ZoneClass::Urban && z.small_cells == 0 && z.macro_sites == 0 {
            v.push(Violation::new(format!("zones.{}", z.id), "zone has no radio sites"));
        }
    }
    let macro_sum: u32 = spec.zones.iter().map(|z| z.macro_sites).sum();
    let small_sum: u32 = spec.zones.iter().map(|z| z.small_cells).sum();
    if macro_sum != spec.ran.macro_count {
        v.push(Violation::new(
            "ran.macro_count",
            format!("zones hold {macro_sum} macro sites, expected {}", spec.ran.macro_count),
        ));
    }
    if small_sum != spec.ran.small_count {
        v.push(Violation::new(
            "ran.small_count",
            format!("zones hold {small_sum} small cells, expected {}", spec.ran.small_count),
        ));
    }

    let u = &spec.uavs;
    if !(u.endurance_h > 0.0) {
        v.push(Violation::new("uavs.endurance_h", "must be positive"));
    }
    if !(u.coverage_km > 0.0) {
        v.push(Violation::new("uavs.coverage_km", "must be positive"));
    }
    if !(u.cruise_speed_kmh > 0.0) {
        v.push(Violation::new("uavs.cruise_speed_kmh", "must be positive"));
    }
    if !(0.0..1.0).contains(&u.reserve_fraction) {
        v.push(Violation::new("uavs.reserve_fraction", "must lie in [0, 1)"));
    }
    if u.count > 0 && u.swap_pads.is_empty() {
        v.push(Violation::new("uavs.swap_pads", "UAVs need at least one swap pad"));
    }
    for (i, p) in u.swap_pads.iter().enumerate() {
        if spec.region_index(&p.region).is_none() {
            v.push(Violation::new(format!("uavs.swap_pads[{i}].region"), "unknown region"));
        }
    }

    let g = &spec.gateways;
    if g.sites.is_empty() {
        v.push(Violation::new("gateways.sites", "at least one gateway required"));
    }
    if g.count as usize != g.sites.len() {
        v.push(Violation::new(
            "gateways.count",
            format!("count {} != {} listed sites", g.count, g.sites.len()),
        ));
    }
    for s in &g.sites {
        if !(s.compute_capacity > 0.0) {
            v.push(Violation::new(format!("gateways.{}.compute_capacity", s.id), "must be positive"));
        }
        if !(s.throughput_bps > 0.0) {
            v.push(Violation::new(format!("gateways.{}.throughput_bps", s.id), "must be positive"));
        }
        if spec.region_index(&s.region).is_none() {
            v.push(Violation::new(format!("gateways.{}.region", s.id), "unknown region"));
        }
    }

    let sla = &spec.sla;
    if !(sla.urllc_latency_ms > 0.0) {
        v.push(Violation::new("sla.urllc_latency_ms", "must be positive"));
    }
    for (name, f) in [
        ("sla.embb_served_fraction", sla.embb_served_fraction),
        ("sla.miot_served_fraction", sla.miot_served_fraction),
        ("sla.urllc_served_fraction", sla.urllc_served_fraction),
    ] {
        if !(f > 0.0 && f <= 1.0) {
            v.push(Violation::new(name, "must lie in (0, 1]"));
        }
    }

    for (i, e) in spec.rain_events.iter().enumerate() {
        if !(e.end_hour > e.start_hour) {
            v.push(Violation::new(format!("rain_events[{i}]"), "end_hour must exceed start_hour"));
        }
        if !(e.attenuation_db >= 0.0) {
            v.push(Violation::new(format!("rain_events[{i}].attenuation_db"), "must be non-negative"));
        }
    }

    for (name, p, kind) in spec.power_catalog.profiles() {
        let field = format!("power_catalog.{name}");
        if p.element_kind != kind {
            v.push(Violation::new(&field, format!("element_kind must be {kind}")));
        }
        if p.off_w != 0.0 {
            v.push(Violation::new(format!("{field}.off_w"), "must be 0"));
        }
        if !(p.deep_sleep_w >= 0.0 && p.deep_sleep_w < p.micro_sleep_w && p.micro_sleep_w < p.active_w) {
            v.push(Violation::new(&field, "requires 0 <= deep_sleep_w < micro_sleep_w < active_w"));
        }
        if kind == ElementKind::Uav {
            match (p.uav_cruise_w, p.uav_hover_w) {
                (Some(c), Some(h)) if h > c && c > 0.0 => {}
                _ => v.push(Violation::new(&field, "uav requires 0 < uav_cruise_w < uav_hover_w")),
            }
        }
    }

    match &spec.carbon_source {
        CarbonSource::Synthetic(s) => {
            if !(s.base_intensity >= 0.0 && s.floor_intensity >= 0.0) {
                v.push(Violation::new("carbon_source", "intensities must be non-negative"));
            }
            for p in &s.profiles {
                if p.hourly_renewable.len() != 24 {
                    v.push(Violation::new(
                        format!("carbon_source.{}.hourly_renewable", p.region),
                        "needs 24 hourly values",
                    ));
                }
                if p.hourly_renewable.iter().any(|r| !(0.0..=1.0).contains(r)) {
                    v.push(Violation::new(
                        format!("carbon_source.{}.hourly_renewable", p.region),
                        "values must lie in [0, 1]",
                    ));
                }
            }
        }
        CarbonSource::File { path, .. } => {
            if path.is_empty() {
                v.push(Violation::new("carbon_source.path", "must not be empty"));
            }
        }
    }

    let e = &spec.edge;
    if !(e.target_utilization > 0.0 && e.target_utilization <= 1.0) {
        v.push(Violation::new("edge.target_utilization", "must lie in (0, 1]"));
    }
    if !(0.0..=1.0).contains(&e.deferrable_fraction) {
        v.push(Violation::new("edge.deferrable_fraction", "must lie in [0, 1]"));
    }

    let o = &spec.orchestration;
    if o.beam_width < 1 {
        v.push(Violation::new("orchestration.beam_width", "must be at least 1"));
    }
    if !(12..=24).contains(&o.horizon_hours) {
        v.push(Violation::new("orchestration.horizon_hours", "must lie in [12, 24]"));
    }
    let l = &o.lattice;
    if l.gateway_modes.is_empty() || l.uav_levels.is_empty() || l.sleep_levels.is_empty() || l.edge_modes.is_empty() {
        v.push(Violation::new("orchestration.lattice", "every knob needs at least one level"));
    }
    if l.uav_levels.iter().chain(&l.sleep_levels).any(|x| !(0.0..=1.0).contains(x)) {
        v.push(Violation::new("orchestration.lattice", "levels must lie in [0, 1]"));
    }
    let rl = &o.rl;
    if !(0.0..1.0).contains(&rl.gamma) {
        v.push(Violation::new("orchestration.rl.gamma", "must lie in [0, 1)"));
    }
    if !(0.0..=1.0).contains(&rl.exploration_start) || !(0.0..=1.0).contains(&rl.exploration_end) {
        v.push(Violation::new("orchestration.rl.exploration", "rates must lie in [0, 1]"));
    }
    v
}

fn zone(id: &str, class: ZoneClass, region: &str, at: [f64; 2], macros: u32, smalls: u32, industrial: bool) -> ZoneSpec {
    ZoneSpec {
        id: id.into(),
        class,
        region: region.into(),
        centroid_km: at,
        macro_sites: macros,
        small_cells: smalls,
        industrial,
    }
}

fn gateway(id: &str, region: &str, at: [f64; 2], servers: f64, gbps: f64) -> GatewaySite {
    GatewaySite {
        id: id.into(),
        region: region.into(),
        position_km: at,
        compute_capacity: servers,
        throughput_bps: gbps * 1e9,
    }
}

fn pad(at: [f64; 2], region: &str) -> PadSpec {
    PadSpec {
        position_km: at,
        region: region.into(),
    }
}

/// The reference metropolitan experiment: 72 LEO satellites in six planes at
/// 600 km, 60 macro and 120 small cells, 24 UAVs with six swap pads, eight
/// edge gateways, one week of hourly decisions and two rain events.
pub fn default_paper_scenario() -> ScenarioSpec {
    use ZoneClass::*;
    let coastal = "coastal";
    let inland = "inland";

    let zones = vec![
        zone("urban-harbor", Urban, coastal, [55.0, 105.0], 10, 30, false),
        zone("urban-bay", Urban, coastal, [75.0, 75.0], 10, 30, false),
        zone("urban-east", Urban, inland, [115.0, 95.0], 10, 30, false),
        zone("suburb-north", Suburban, coastal, [40.0, 150.0], 6, 10, true),
        zone("suburb-hills", Suburban, inland, [140.0, 145.0], 6, 10, true),
        zone("suburb-south", Suburban, inland, [135.0, 55.0], 6, 10, true),
        zone("rural-coast", Rural, coastal, [25.0, 35.0], 4, 0, false),
        zone("rural-valley", Rural, inland, [170.0, 175.0], 4, 0, false),
        zone("rural-desert", Rural, inland, [175.0, 30.0], 4, 0, false),
    ];

    let gateways = vec![
        gateway("gw-harbor", coastal, [50.0, 95.0], 140.0, 14.0),
        gateway("gw-bay", coastal, [80.0, 60.0], 40.0, 12.0),
        gateway("gw-north", coastal, [35.0, 160.0], 30.0, 5.0),
        gateway("gw-coast", coastal, [20.0, 40.0], 30.0, 3.0),
        gateway("gw-hub", inland, [125.0, 105.0], 220.0, 36.0),
        gateway("gw-hills", inland, [150.0, 160.0], 40.0, 6.0),
        gateway("gw-south", inland, [145.0, 45.0], 40.0, 8.0),
        gateway("gw-far", inland, [185.0, 100.0], 30.0, 4.0),
    ];

    let uav_power = PowerProfile {
        element_kind: ElementKind::Uav,
        active_w: 800.0,
        micro_sleep_w: 100.0,
        deep_sleep_w: 10.0,
        off_w: 0.0,
        load_slope_w_per_bps: None,
        uav_cruise_w: Some(400.0),
        uav_hover_w: Some(800.0),
    };

    let radio = |band, ghz, bw, tx, noise, d: PerZoneClass<f64>, env| RadioSpec {
        band,
        carrier_ghz: ghz,
        bandwidth_hz: bw,
        tx_power_dbm: tx,
        noise_dbm: noise,
        distance_km: d,
        env,
    };
    let same = |d: f64| PerZoneClass {
        urban: d,
        suburban: d,
        rural: d,
    };

    ScenarioSpec {
        days: 7,
        epoch_minutes: 1,
        decision_interval_hours: 1,
        geo: GeoAnchor {
            center_lat_deg: 37.0,
            center_lon_deg: 30.0,
            center_km: [100.0, 100.0],
        },
        regions: vec![coastal.into(), inland.into()],
        zones,
        constellation: ConstellationSpec {
            planes: 6,
            sats_per_plane: 12,
            total: 72,
            altitude_km: 600.0,
            inclination_deg: 53.0,
            raan_spread_deg: 360.0,
            phasing: 1,
            min_elevation_deg: 10.0,
        },
        ran: RanSpec {
            macro_count: 60,
            small_count: 120,
        },
        uavs: UavSpec {
            count: 24,
            endurance_h: 4.0,
            coverage_km: 15.0,
            cruise_speed_kmh: 60.0,
            reserve_fraction: 0.05,
            swap_pads: vec![
                pad([60.0, 100.0], coastal),
                pad([80.0, 70.0], coastal),
                pad([45.0, 145.0], coastal),
                pad([120.0, 90.0], inland),
                pad([140.0, 140.0], inland),
                pad([160.0, 40.0], inland),
            ],
        },
        gateways: GatewaySpec { count: 8, sites: gateways },
        traffic_profiles: TrafficProfiles {
            embb: EmbbProfile {
                peak_hour: 20.0,
                trough_hour: 4.0,
                peak_bps: PerZoneClass {
                    urban: 10.0e9,
                    suburban: 4.0e9,
                    rural: 0.3e9,
                },
                peak_to_trough: 4.0,
                commuter_shift: 0.25,
                noise: 0.05,
            },
            urllc: UrllcProfile {
                industrial_bps: 0.2e9,
                other_bps: 0.05e9,
                noise: 0.02,
            },
            miot: MiotProfile {
                mean_bps: PerZoneClass {
                    urban: 0.1e9,
                    suburban: 0.2e9,
                    rural: 0.3e9,
                },
                bursts_per_minute: 4.0,
            },
            surge: Some(SurgeSpec {
                start_hour: 5.0 * 24.0 + 12.0,
                end_hour: 5.0 * 24.0 + 16.0,
                multiplier: 2.0,
                zone_class: Urban,
            }),
        },
        rain_events: vec![
            RainEvent {
                start_hour: 2.0 * 24.0 + 18.0,
                end_hour: 2.0 * 24.0 + 22.0,
                affected_bands: vec![Band::Ka, Band::MicrowaveBackhaul],
                attenuation_db: 15.0,
            },
            RainEvent {
                start_hour: 5.0 * 24.0 + 12.0,
                end_hour: 5.0 * 24.0 + 16.0,
                affected_bands: vec![Band::Ka, Band::MicrowaveBackhaul],
                attenuation_db: 15.0,
            },
        ],
        carbon_source: CarbonSource::Synthetic(SyntheticCarbon {
            base_intensity: 450.0,
            floor_intensity: 50.0,
            noise: 0.08,
            profiles: vec![
                RegionProfile {
                    region: coastal.into(),
                    hourly_renewable: vec![
                        0.12, 0.11, 0.10, 0.10, 0.10, 0.12, 0.18, 0.30, 0.42, 0.52, 0.57, 0.58, //
                        0.59, 0.59, 0.58, 0.55, 0.46, 0.34, 0.22, 0.15, 0.13, 0.12, 0.12, 0.12,
                    ],
                },
                RegionProfile {
                    region: inland.into(),
                    hourly_renewable: vec![
                        0.80, 0.84, 0.85, 0.84, 0.80, 0.72, 0.58, 0.40, 0.26, 0.17, 0.12, 0.11, //
                        0.10, 0.10, 0.11, 0.13, 0.17, 0.22, 0.25, 0.27, 0.29, 0.30, 0.52, 0.70,
                    ],
                },
            ],
        }),
        power_catalog: PowerCatalog {
            macro_cell: PowerProfile::simple(ElementKind::Macro, 2200.0, Some(400.0 / 156e6)),
            small_cell: PowerProfile::simple(ElementKind::Small, 90.0, Some(20.0 / 666e6)),
            edge_server: PowerProfile::simple(ElementKind::EdgeServer, 800.0, None),
            uav: uav_power,
            satellite_share: PowerProfile::simple(ElementKind::SatelliteShare, 1000.0, Some(500.0 / 1.0e9)),
            gateway: PowerProfile::simple(ElementKind::Gateway, 2000.0, None),
        },
        links: LinkSpec {
            macro_cell: radio(
                Band::Sub6,
                2.0,
                20e6,
                43.0,
                -94.0,
                PerZoneClass {
                    urban: 1.0,
                    suburban: 2.0,
                    rural: 4.0,
                },
                None,
            ),
            small_cell: radio(
                Band::MmWave,
                28.0,
                100e6,
                30.0,
                -87.0,
                PerZoneClass {
                    urban: 0.2,
                    suburban: 0.25,
                    rural: 0.3,
                },
                None,
            ),
            uav: radio(Band::Sub6, 3.5, 20e6, 30.0, -94.0, same(2.0), Some(PathEnv::AirGround)),
            satellite: radio(Band::Ka, 20.0, 250e6, 50.0, -141.5, same(0.0), Some(PathEnv::SpaceGround)),
            microwave: radio(
                Band::MicrowaveBackhaul,
                80.0,
                2e9,
                40.0,
                -150.0,
                same(0.0),
                Some(PathEnv::SpaceGround),
            ),
            fiber_capacity_bps: 40e9,
            fiber_km_per_ms: 200.0,
            exponents: PathLossExponents {
                urban: 3.5,
                suburban: 3.0,
                rural: 2.7,
                air_ground: 2.2,
                space_ground: 2.0,
            },
            max_spectral_efficiency: 7.8,
            queue_burst_bits: 1e6,
            saturation_latency_ms: 250.0,
            access_latency_ms: 0.1,
            ground_fill: 0.9,
            isl_hop_latency_ms: 4.0,
            isl_capacity_bps: 10e9,
        },
        edge: EdgeSpec {
            servers_per_gbps: ClassValues {
                embb: 1.0,
                urllc: 5.0,
                miot: 40.0,
            },
            target_utilization: 0.7,
            remote_overhead: 0.1,
            processing_ms: 0.5,
            inter_gateway_ms: 1.0,
            min_servers: 1.0,
            deferrable_fraction: 0.8,
            max_defer_hours: 12,
        },
        sla: SlaSpec {
            urllc_latency_ms: 5.0,
            embb_served_fraction: 0.95,
            miot_served_fraction: 0.90,
            urllc_served_fraction: 0.99,
        },
        orchestration: OrchestrationSpec {
            beam_width: 8,
            horizon_hours: 24,
            latency_margin: 0.8,
            static_uav_fraction: 0.5,
            forecast_blend: 0.3,
            forecast_ewma_alpha: 0.3,
            recovery_threshold: 1.5,
            recovery_hold_minutes: 5,
            lattice: LatticeSpec {
                gateway_modes: vec![
                    GatewayMode::Nearest,
                    GatewayMode::Balanced,
                    GatewayMode::RegionFirst(0),
                    GatewayMode::RegionFirst(1),
                ],
                uav_levels: vec![0.0, 0.25, 0.5, 1.0],
                sleep_levels: vec![0.0, 0.3, 0.6],
                edge_modes: vec![EdgeMode::Local, EdgeMode::RegionHub(0), EdgeMode::RegionHub(1), EdgeMode::Defer],
                macro_sleep_ratio: 0.5,
            },
            rl: RlConfig {
                gamma: 0.99,
                actor_step: 0.01,
                critic_step: 0.05,
                sla_penalty: 10.0,
                exploration_start: 0.2,
                exploration_end: 0.01,
                episodes: 200,
                episode_days: 7,
                randomize_events: true,
                critic_warmup_episodes: 2,
            },
        },
        seed: 20_240_601,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_reference_counts() {
        let s = default_paper_scenario();
        assert_eq!(s.constellation.planes, 6);
        assert_eq!(s.constellation.sats_per_plane, 12);
        assert_eq!(s.constellation.total, 72);
        assert_eq!(s.constellation.altitude_km, 600.0);
        assert_eq!(s.ran.macro_count, 60);
        assert_eq!(s.ran.small_count, 120);
        assert_eq!(s.uavs.count, 24);
        assert_eq!(s.uavs.endurance_h, 4.0);
        assert_eq!(s.uavs.coverage_km, 15.0);
        assert_eq!(s.uavs.swap_pads.len(), 6);
        assert_eq!(s.gateways.count, 8);
        assert_eq!(s.days, 7);
        assert_eq!(s.decision_interval_hours, 1);
        assert_eq!(s.rain_events.len(), 2);
        assert_eq!((s.rain_events[0].start_hour, s.rain_events[0].end_hour), (66.0, 70.0));
        assert_eq!((s.rain_events[1].start_hour, s.rain_events[1].end_hour), (132.0, 136.0));
    }

    #[test]
    fn default_power_catalog_uses_range_midpoints() {
        let p = default_paper_scenario().power_catalog;
        assert_eq!(p.macro_cell.active_w, 2200.0);
        assert_eq!(p.small_cell.active_w, 90.0);
        assert_eq!(p.edge_server.active_w, 800.0);
        assert_eq!(p.uav.uav_cruise_w, Some(400.0));
        assert_eq!(p.uav.uav_hover_w, Some(800.0));
    }

    #[test]
    fn default_validates_clean() {
        assert!(validate(&default_paper_scenario()).is_empty());
    }

    #[test]
    fn zero_days_names_field() {
        let mut s = default_paper_scenario();
        s.days = 0;
        let v = validate(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "days");
    }

    #[test]
    fn unmapped_zone_is_named() {
        let mut s = default_paper_scenario();
        s.zones[4].region = "desert".into();
        let v = validate(&s);
        assert_eq!(v.len(), 1);
        assert!(v[0].field.contains("suburb-hills"), "{:?}", v);
    }

    #[test]
    fn constellation_product_checked() {
        let mut s = default_paper_scenario();
        s.constellation.sats_per_plane = 11;
        let err = parse_scenario(&s.to_json()).unwrap_err();
        match err {
            Error::Validation { violations } => {
                assert!(violations.iter().any(|v| v.field == "constellation.total"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn epoch_must_divide_hour() {
        let mut s = default_paper_scenario();
        s.epoch_minutes = 7;
        let v = validate(&s);
        assert!(v.iter().any(|v| v.field == "epoch_minutes"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = default_paper_scenario().to_json();
        let tampered = json.replacen("\"days\": 7", "\"days\": 7, \"colour\": \"blue\"", 1);
        assert!(matches!(parse_scenario(&tampered), Err(Error::Parse { .. })));
    }

    #[test]
    fn json_round_trip() {
        let s = default_paper_scenario();
        assert_eq!(parse_scenario(&s.to_json()).unwrap(), s);
    }
}
