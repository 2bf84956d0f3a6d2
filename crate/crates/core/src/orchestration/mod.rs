//! Policy layer: hourly network configurations, the discrete knob lattice,
//! the day-ahead beam-search planner, the linear actor-critic controller
//! and the three baseline policies.

pub mod baseline;
pub mod lattice;
pub mod mpc;
pub mod rl;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::SleepMode;
use crate::error::{Error, Result};
use crate::topology::{SiteKind, Topology};
use crate::twin::ScenarioResult;

/// Edge services, one per traffic class.
pub const SERVICES: [&str; 3] = ["embb_cache", "urllc_control", "miot_analytics"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Hosted at each zone's serving gateway.
    Local,
    Gateway(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provisioning {
    /// Servers follow load at the target utilization.
    Autoscale,
    /// Every installed server at a hosting gateway stays powered.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Handover {
    Auto,
    Preferred(u16),
}

/// One hour of network configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourConfig {
    /// Serving gateway per zone.
    pub serving_gateway: Vec<usize>,
    /// Zone of each deployed UAV slot; the engine picks airframes with enough battery.
    pub uav_slots: Vec<usize>,
    /// Mode per small cell, in topology order of small cells.
    pub small_cell_sleep: Vec<SleepMode>,
    /// Mode per macro site, in topology order of macro sites.
    pub macro_power_mode: Vec<SleepMode>,
    /// Host per service in [`SERVICES`] order.
    pub edge_placement: [Placement; 3],
    /// Batch analytics work is queued instead of processed.
    pub defer_analytics: bool,
    pub provisioning: Provisioning,
    pub satellite_handover: Vec<Handover>,
}

impl HourConfig {
    /// Everything awake, nearest gateways, no UAVs, services local.
    pub fn baseline(topology: &Topology) -> Self {
        let n_small = topology.sites.iter().filter(|s| s.kind == SiteKind::Small).count();
        let n_macro = topology.sites.len() - n_small;
        HourConfig {
            serving_gateway: (0..topology.zones.len()).map(|z| topology.gateways_by_distance(z)[0]).collect(),
            uav_slots: Vec::new(),
            small_cell_sleep: vec![SleepMode::Active; n_small],
            macro_power_mode: vec![SleepMode::Active; n_macro],
            edge_placement: [Placement::Local; 3],
            defer_analytics: false,
            provisioning: Provisioning::Autoscale,
            satellite_handover: vec![Handover::Auto; topology.zones.len()],
        }
    }

    /// Checks the structural invariants against a topology.
    pub fn check(&self, topology: &Topology) -> Result<()> {
        let zones = topology.zones.len();
        let gws = topology.gateways.len();
        let n_small = topology.sites.iter().filter(|s| s.kind == SiteKind::Small).count();
        let n_macro = topology.sites.len() - n_small;
        let bad = |m: String| Err(Error::Config(m));
        if self.serving_gateway.len() != zones || self.serving_gateway.iter().any(|&g| g >= gws) {
            return bad("every zone needs a valid serving gateway".into());
        }
        if self.uav_slots.len() > topology.uavs.len() || self.uav_slots.iter().any(|&z| z >= zones) {
            return bad("UAV slots exceed fleet or reference unknown zones".into());
        }
        if self.small_cell_sleep.len() != n_small || self.macro_power_mode.len() != n_macro {
            return bad("per-site mode vectors do not match the site count".into());
        }
        if self
            .macro_power_mode
            .iter()
            .any(|m| !matches!(m, SleepMode::Active | SleepMode::MicroSleep))
        {
            return bad("macro sites may only be active or micro-sleeping".into());
        }
        if self.edge_placement.iter().any(|p| matches!(p, Placement::Gateway(g) if *g >= gws)) {
            return bad("edge placement references an unknown gateway".into());
        }
        if self.satellite_handover.len() != zones
            || self
                .satellite_handover
                .iter()
                .any(|h| matches!(h, Handover::Preferred(s) if *s as usize >= topology.satellites.len()))
        {
            return bad("satellite handover references an unknown satellite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayPlan {
    pub configs: Vec<HourConfig>,
    pub predicted: ScenarioResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    NoOp,
    RerouteZoneToGateway,
    ActivateUav,
    DeactivateUav,
    WakeSmallCells,
    SleepSmallCells,
    ShiftEdgeService,
    SteerBeamToSatellite,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::NoOp,
        ActionKind::RerouteZoneToGateway,
        ActionKind::ActivateUav,
        ActionKind::DeactivateUav,
        ActionKind::WakeSmallCells,
        ActionKind::SleepSmallCells,
        ActionKind::ShiftEdgeService,
        ActionKind::SteerBeamToSatellite,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::NoOp => "no_op",
            ActionKind::RerouteZoneToGateway => "reroute_zone_to_gateway",
            ActionKind::ActivateUav => "activate_uav",
            ActionKind::DeactivateUav => "deactivate_uav",
            ActionKind::WakeSmallCells => "wake_small_cells",
            ActionKind::SleepSmallCells => "sleep_small_cells",
            ActionKind::ShiftEdgeService => "shift_edge_service",
            ActionKind::SteerBeamToSatellite => "steer_beam_to_satellite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ActionParams {
    None,
    /// (zone, gateway) pairs.
    Reroute(Vec<(usize, usize)>),
    Zone(usize),
    Edge {
        service: usize,
        gateway: usize,
    },
    /// (zone, satellite) pairs.
    Beam(Vec<(usize, u16)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub params: ActionParams,
}

impl Action {
    pub fn no_op() -> Self {
        Action {
            kind: ActionKind::NoOp,
            params: ActionParams::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Static,
    QosOnly,
    EnergyOnly,
    /// Day-ahead planner alone, without the real-time controller.
    Mpc,
    MpcRl,
}

impl PolicyKind {
    pub const PAPER: [PolicyKind; 4] = [PolicyKind::Static, PolicyKind::QosOnly, PolicyKind::EnergyOnly, PolicyKind::MpcRl];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Static => "static",
            PolicyKind::QosOnly => "qos",
            PolicyKind::EnergyOnly => "energy",
            PolicyKind::Mpc => "mpc",
            PolicyKind::MpcRl => "mpc_rl",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(PolicyKind::Static),
            "qos" | "qos_only" => Ok(PolicyKind::QosOnly),
            "energy" | "energy_only" => Ok(PolicyKind::EnergyOnly),
            "mpc" => Ok(PolicyKind::Mpc),
            "mpc_rl" => Ok(PolicyKind::MpcRl),
            other => Err(Error::InvalidParameter(format!("unknown policy '{other}'"))),
        }
    }
}
