//! Element power models, per-tick energy ledgers by layer and region,
//! emissions from regional carbon intensity, and the gCO2e-per-GB metric.

use serde::{Deserialize, Serialize};

use crate::config::{ElementKind, PowerProfile};
use crate::environment::CarbonTrace;
use crate::error::{Error, Result};
use crate::topology::UavMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SleepMode {
    Active,
    MicroSleep,
    DeepSleep,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementMode {
    Sleep(SleepMode),
    Uav(UavMode),
}

/// Draw of one element in a mode. Load adds `load_slope_w_per_bps` in active mode only.
pub fn element_power_w(profile: &PowerProfile, mode: ElementMode, load_bps: f64) -> Result<f64> {
    let invalid = || Error::InvalidMode {
        kind: profile.element_kind.to_string(),
        mode: format!("{mode:?}"),
    };
    match mode {
        ElementMode::Sleep(s) => {
            if profile.element_kind == ElementKind::Uav && s != SleepMode::Off {
                return Err(invalid());
            }
            Ok(match s {
                SleepMode::Active => profile.active_w + profile.load_slope_w_per_bps.unwrap_or(0.0) * load_bps.max(0.0),
                SleepMode::MicroSleep => profile.micro_sleep_w,
                SleepMode::DeepSleep => profile.deep_sleep_w,
                SleepMode::Off => profile.off_w,
            })
        }
        ElementMode::Uav(m) => {
            if profile.element_kind != ElementKind::Uav {
                return Err(invalid());
            }
            Ok(match m {
                UavMode::Grounded => profile.off_w,
                UavMode::Cruise => profile.uav_cruise_w.ok_or_else(invalid)?,
                UavMode::Hover => profile.uav_hover_w.ok_or_else(invalid)?,
                UavMode::Standby => profile.micro_sleep_w,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Ran,
    Satellite,
    Uav,
    Edge,
}

impl Layer {
    pub const ALL: [Layer; 4] = [Layer::Ran, Layer::Satellite, Layer::Uav, Layer::Edge];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Ran => "ran",
            Layer::Satellite => "satellite",
            Layer::Uav => "uav",
            Layer::Edge => "edge",
        }
    }
}

/// Grid draw of one element (or a group of identical elements) during a tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDraw {
    pub layer: Layer,
    pub region: usize,
    pub watts: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub epoch: u64,
    /// kWh per layer in [`Layer::ALL`] order.
    pub layer_kwh: [f64; 4],
    pub region_kwh: Vec<f64>,
    pub renewable_kwh: f64,
    pub emissions_g: f64,
    pub bits_delivered: f64,
}

impl EnergyLedger {
    pub fn new(epoch: u64, regions: usize) -> Self {
        EnergyLedger {
            epoch,
            region_kwh: vec![0.0; regions],
            ..Default::default()
        }
    }

    pub fn total_kwh(&self) -> f64 {
        self.layer_kwh.iter().sum()
    }

    pub fn layer(&self, layer: Layer) -> f64 {
        self.layer_kwh[layer as usize]
    }

    pub fn add_kwh(&mut self, layer: Layer, region: usize, kwh: f64) {
        self.layer_kwh[layer as usize] += kwh;
        self.region_kwh[region] += kwh;
    }

    /// Adds another ledger's quantities (epoch unchanged).
    pub fn accumulate(&mut self, other: &EnergyLedger) {
        for (a, b) in self.layer_kwh.iter_mut().zip(&other.layer_kwh) {
            *a += b;
        }
        for (a, b) in self.region_kwh.iter_mut().zip(&other.region_kwh) {
            *a += b;
        }
        self.renewable_kwh += other.renewable_kwh;
        self.emissions_g += other.emissions_g;
        self.bits_delivered += other.bits_delivered;
    }
}

/// Energy of a set of element draws over `duration_h`, by layer and region.
pub fn step_energy(epoch: u64, draws: &[EnergyDraw], duration_h: f64, regions: usize) -> EnergyLedger {
    let mut ledger = EnergyLedger::new(epoch, regions);
    for d in draws {
        ledger.add_kwh(d.layer, d.region, d.watts * duration_h / 1000.0);
    }
    ledger
}

/// Emissions and renewable energy of per-region consumption at the given per-region intensity and share.
pub fn emissions_for(region_kwh: &[f64], intensity: &[f64], renewable: &[f64]) -> (f64, f64) {
    let mut g = 0.0;
    let mut r = 0.0;
    for i in 0..region_kwh.len() {
        g += region_kwh[i] * intensity[i];
        r += region_kwh[i] * renewable[i];
    }
    (g, r)
}

/// Emissions (g) and renewable kWh of a ledger at trace time `t_hours`.
pub fn step_emissions(ledger: &EnergyLedger, trace: &CarbonTrace, t_hours: f64) -> Result<(f64, f64)> {
    let mut intensity = Vec::with_capacity(ledger.region_kwh.len());
    let mut renewable = Vec::with_capacity(ledger.region_kwh.len());
    for name in trace.regions.iter().take(ledger.region_kwh.len()) {
        intensity.push(trace.carbon_intensity_at(name, t_hours)?);
        renewable.push(trace.renewable_share_at(name, t_hours)?);
    }
    if intensity.len() != ledger.region_kwh.len() {
        return Err(Error::InvalidParameter("ledger has more regions than the trace".into()));
    }
    Ok(emissions_for(&ledger.region_kwh, &intensity, &renewable))
}

pub const BITS_PER_GB: f64 = 8e9;

pub fn gco2_per_gb(emissions_g: f64, bits_delivered: f64) -> Result<f64> {
    if !(bits_delivered > 0.0) {
        return Err(Error::ZeroTraffic);
    }
    Ok(emissions_g / (bits_delivered / BITS_PER_GB))
}

pub fn renewable_utilization(ledgers: &[EnergyLedger]) -> Result<f64> {
    let total: f64 = ledgers.iter().map(EnergyLedger::total_kwh).sum();
    let renewable: f64 = ledgers.iter().map(|l| l.renewable_kwh).sum();
    if ledgers.is_empty() || !(total > 0.0) {
        return Err(Error::EmptyRun);
    }
    Ok(renewable / total)
}
