//! Browser bindings for the demo page in `www/`.
//!
//! Every export works on the built-in default scenario and returns JSON text,
//! so the page needs no glue beyond `JSON.parse`.

use isatn_core::config::{RadioSpec, ZoneClass};
use isatn_core::environment::scenario_carbon_trace;
use isatn_core::linkmodel::{capacity_from_snr, path_loss_db};
use isatn_core::topology::Topology;
use isatn_core::{default_paper_scenario, Error, ScenarioSpec};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Hourly intensity and renewable share per region for `days` synthetic days.
pub fn carbon_trace_value(seed: u64, days: u32) -> Result<Value, Error> {
    if days == 0 || days > 31 {
        return Err(Error::InvalidParameter(format!("days must be in 1..=31, got {days}")));
    }
    let mut spec = default_paper_scenario();
    spec.days = days;
    let trace = scenario_carbon_trace(&spec, seed, None)?;
    let series = |f: &dyn Fn(usize, u32) -> f64| -> Vec<Vec<f64>> {
        (0..trace.regions.len())
            .map(|r| (0..trace.hours).map(|h| f(r, h)).collect())
            .collect()
    };
    Ok(json!({
        "regions": trace.regions,
        "intensity": series(&|r, h| trace.intensity(r, h)),
        "renewable": series(&|r, h| trace.renewable(r, h)),
    }))
}

fn radio<'a>(spec: &'a ScenarioSpec, link: &str) -> Result<&'a RadioSpec, Error> {
    let l = &spec.links;
    Ok(match link {
        "macro" => &l.macro_cell,
        "small" => &l.small_cell,
        "uav" => &l.uav,
        "satellite" => &l.satellite,
        "microwave" => &l.microwave,
        other => return Err(Error::InvalidParameter(format!("unknown link '{other}'"))),
    })
}

fn zone_class(name: &str) -> Result<ZoneClass, Error> {
    match name {
        "urban" => Ok(ZoneClass::Urban),
        "suburban" => Ok(ZoneClass::Suburban),
        "rural" => Ok(ZoneClass::Rural),
        other => Err(Error::InvalidParameter(format!("unknown zone class '{other}'"))),
    }
}

/// Capacity (Mbit/s) of a link at `distance_km` for rain fades of 0, 1, ... `max_rain_db` dB.
pub fn capacity_curve_value(link: &str, class: &str, distance_km: f64, max_rain_db: f64) -> Result<Value, Error> {
    if !(0.0..=60.0).contains(&max_rain_db) {
        return Err(Error::InvalidParameter(format!(
            "rain fade must be in 0..=60 dB, got {max_rain_db}"
        )));
    }
    let spec = default_paper_scenario();
    let r = radio(&spec, link)?;
    let env = r.env.unwrap_or(zone_class(class)?.path_env());
    let pl = path_loss_db(distance_km, r.carrier_ghz, env, &spec.links.exponents)?;
    let max_se = spec.links.max_spectral_efficiency;
    let points: Vec<[f64; 2]> = (0..=max_rain_db.floor() as u32)
        .map(|db| {
            let db = f64::from(db);
            let bps = capacity_from_snr(r.tx_power_dbm - pl - db - r.noise_dbm, r.bandwidth_hz, max_se);
            [db, bps / 1e6]
        })
        .collect();
    Ok(json!({
        "link": link,
        "band": r.band,
        "path_loss_db": pl,
        "points": points,
    }))
}

/// Constellation and zone geometry of the default scenario.
#[wasm_bindgen]
pub struct Sky {
    topo: Topology,
}

#[wasm_bindgen]
impl Sky {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Sky, JsError> {
        Sky::build().map_err(js)
    }

    /// Zone ids and classes as JSON.
    pub fn zones(&self) -> String {
        let zones: Vec<Value> = self.topo.zones.iter().map(|z| json!({ "id": z.id, "class": z.class })).collect();
        Value::Array(zones).to_string()
    }

    /// Satellites above the elevation mask from a zone at `minute`, highest first, as JSON.
    pub fn visible(&self, zone: u32, minute: f64) -> Result<String, JsError> {
        self.visible_value(zone as usize, minute).map(|v| v.to_string()).map_err(js)
    }
}

impl Sky {
    pub fn build() -> Result<Sky, Error> {
        Ok(Sky {
            topo: Topology::build(&default_paper_scenario())?,
        })
    }

    pub fn visible_value(&self, zone: usize, minute: f64) -> Result<Value, Error> {
        if zone >= self.topo.zones.len() {
            return Err(Error::InvalidParameter(format!("zone {zone} out of range")));
        }
        if !minute.is_finite() || minute < 0.0 {
            return Err(Error::InvalidParameter(format!("minute must be non-negative, got {minute}")));
        }
        let t_s = minute * 60.0;
        let g = self.topo.zone_unit(zone);
        let mut seen: Vec<(usize, f64)> = self
            .topo
            .orbits
            .iter()
            .enumerate()
            .map(|(i, o)| (i, o.elevation_deg(g, t_s)))
            .filter(|&(_, el)| el >= self.topo.min_elevation_deg)
            .collect();
        seen.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let sats: Vec<Value> = seen
            .iter()
            .map(|&(i, el)| {
                let s = &self.topo.satellites[i];
                json!({ "id": s.id, "plane": s.plane_index, "slot": s.slot_index, "elevation_deg": el })
            })
            .collect();
        Ok(json!({
            "zone": self.topo.zones[zone].id,
            "min_elevation_deg": self.topo.min_elevation_deg,
            "satellites": sats,
        }))
    }
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn carbon_trace(seed: u32, days: u32) -> Result<String, JsError> {
    carbon_trace_value(u64::from(seed), days).map(|v| v.to_string()).map_err(js)
}

#[wasm_bindgen]
pub fn capacity_curve(link: &str, class: &str, distance_km: f64, max_rain_db: f64) -> Result<String, JsError> {
    capacity_curve_value(link, class, distance_km, max_rain_db)
        .map(|v| v.to_string())
        .map_err(js)
}
