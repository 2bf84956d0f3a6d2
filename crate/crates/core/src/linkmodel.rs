//! Link budgets, Shannon capacity and fluid-flow latency.
//!
//! Path loss is a single log-distance family with a per-environment
//! exponent; capacity follows Shannon with a spectral-efficiency ceiling;
//! queueing is an M/M/1-style `K / (C - L)` term capped by a saturation value.

use serde::{Deserialize, Serialize};

use crate::config::PathLossExponents;
use crate::error::{Error, Result};

/// Propagation speed used for the speed-of-light bound (km per ms).
pub const LIGHT_KM_PER_MS: f64 = 299.792_458;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Sub6,
    #[serde(rename = "mmwave")]
    MmWave,
    Ka,
    MicrowaveBackhaul,
    Isl,
    /// Terrestrial fiber transport; immune to weather.
    Fiber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathEnv {
    Urban,
    Suburban,
    Rural,
    AirGround,
    SpaceGround,
}

impl PathLossExponents {
    pub fn exponent(&self, env: PathEnv) -> f64 {
        match env {
            PathEnv::Urban => self.urban,
            PathEnv::Suburban => self.suburban,
            PathEnv::Rural => self.rural,
            PathEnv::AirGround => self.air_ground,
            PathEnv::SpaceGround => self.space_ground,
        }
    }
}

/// Endpoint of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeId {
    Zone(u16),
    Macro(u16),
    Small(u16),
    Uav(u16),
    Satellite(u16),
    Gateway(u16),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub endpoint_a: NodeId,
    pub endpoint_b: NodeId,
    pub band: Band,
    pub distance_km: f64,
    pub path_loss_db: f64,
    pub attenuation_db: f64,
    pub capacity_bps: f64,
    pub prop_latency_ms: f64,
}

impl LinkState {
    /// A radio link whose capacity follows from its budget.
    #[allow(clippy::too_many_arguments)]
    pub fn radio(
        endpoint_a: NodeId,
        endpoint_b: NodeId,
        band: Band,
        distance_km: f64,
        path_loss_db: f64,
        attenuation_db: f64,
        budget: &LinkBudget,
    ) -> Self {
        let mut link = LinkState {
            endpoint_a,
            endpoint_b,
            band,
            distance_km,
            path_loss_db,
            attenuation_db,
            capacity_bps: 0.0,
            prop_latency_ms: distance_km / LIGHT_KM_PER_MS,
        };
        link.capacity_bps = link_capacity_bps(&link, budget.tx_power_dbm, budget.noise_dbm, budget.bandwidth_hz, budget.max_se);
        link
    }

    /// A wired or switched link with a fixed capacity and latency.
    pub fn fixed(endpoint_a: NodeId, endpoint_b: NodeId, band: Band, distance_km: f64, capacity_bps: f64, prop_latency_ms: f64) -> Self {
        LinkState {
            endpoint_a,
            endpoint_b,
            band,
            distance_km,
            path_loss_db: 0.0,
            attenuation_db: 0.0,
            capacity_bps,
            prop_latency_ms: prop_latency_ms.max(distance_km / LIGHT_KM_PER_MS),
        }
    }
}

/// Transmitter and receiver parameters for one radio technology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub bandwidth_hz: f64,
    pub max_se: f64,
}

/// Log-distance path loss with exponent `n`.
pub fn path_loss_n(distance_km: f64, carrier_ghz: f64, n: f64) -> Result<f64> {
    if !(distance_km > 0.0) || !(carrier_ghz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "path loss needs positive distance and carrier (got {distance_km} km, {carrier_ghz} GHz)"
        )));
    }
    Ok(32.44 + 20.0 * (carrier_ghz * 1000.0).log10() + 10.0 * n * distance_km.log10())
}

pub fn path_loss_db(distance_km: f64, carrier_ghz: f64, env: PathEnv, exponents: &PathLossExponents) -> Result<f64> {
    path_loss_n(distance_km, carrier_ghz, exponents.exponent(env))
}

/// Shannon spectral efficiency (bit/s/Hz) at a given SNR, clamped at `max_se`.
pub fn spectral_efficiency(snr_db: f64, max_se: f64) -> f64 {
    (1.0 + 10f64.powf(snr_db / 10.0)).log2().min(max_se)
}

pub fn capacity_from_snr(snr_db: f64, bandwidth_hz: f64, max_se: f64) -> f64 {
    bandwidth_hz * spectral_efficiency(snr_db, max_se)
}

pub fn link_capacity_bps(link: &LinkState, tx_power_dbm: f64, noise_dbm: f64, bandwidth_hz: f64, max_se: f64) -> f64 {
    let snr = tx_power_dbm - link.path_loss_db - link.attenuation_db - noise_dbm;
    capacity_from_snr(snr, bandwidth_hz, max_se)
}

/// Queueing delay in ms for `load_bps` on a link of `capacity_bps`; `None` when saturated.
pub fn queueing_ms(load_bps: f64, capacity_bps: f64, burst_bits: f64) -> Option<f64> {
    if load_bps >= capacity_bps {
        None
    } else {
        Some(1000.0 * burst_bits / (capacity_bps - load_bps))
    }
}

/// End-to-end latency of a flow: propagation along the path plus queueing at the bottleneck.
///
/// At or above capacity the result is the saturation value; below it the
/// result is capped there so the function stays monotone in load.
pub fn flow_latency_ms(path: &[LinkState], offered_load_bps: f64, capacity_bps: f64, burst_bits: f64, saturation_ms: f64) -> f64 {
    let prop: f64 = path.iter().map(|l| l.prop_latency_ms).sum();
    match queueing_ms(offered_load_bps, capacity_bps, burst_bits) {
        Some(q) => (prop + q).min(saturation_ms),
        None => saturation_ms,
    }
}

/// Slant range (km) from a ground point to a satellite at `altitude_km` seen at `elevation_deg`.
pub fn slant_range_km(elevation_deg: f64, altitude_km: f64, earth_radius_km: f64) -> f64 {
    let el = elevation_deg.to_radians();
    let r = earth_radius_km + altitude_km;
    let re = earth_radius_km;
    (r * r - (re * el.cos()).powi(2)).sqrt() - re * el.sin()
}
