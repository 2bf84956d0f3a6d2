//! Exogenous processes: per-zone traffic demand, rain events and grid
//! carbon traces (loaded from CSV or synthesized from hourly profiles).

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::config::{CarbonSource, RegionProfile, ScenarioSpec, SurgeSpec, TrafficProfiles, ZoneClass};
use crate::error::{Error, Result};
use crate::linkmodel::Band;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficClass {
    Embb,
    Urllc,
    Miot,
}

impl TrafficClass {
    pub const ALL: [TrafficClass; 3] = [TrafficClass::Embb, TrafficClass::Urllc, TrafficClass::Miot];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TrafficClass::Embb => "embb",
            TrafficClass::Urllc => "urllc",
            TrafficClass::Miot => "miot",
        }
    }
}

pub const EMBB: usize = 0;
pub const URLLC: usize = 1;
pub const MIOT: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficDemand {
    pub epoch: u64,
    pub zone: String,
    pub class: TrafficClass,
    pub offered_bits: f64,
    pub latency_target_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RainEvent {
    pub start_hour: f64,
    pub end_hour: f64,
    pub affected_bands: Vec<Band>,
    pub attenuation_db: f64,
}

impl RainEvent {
    pub fn active_at(&self, t_hours: f64) -> bool {
        t_hours >= self.start_hour && t_hours < self.end_hour
    }
}

/// Sum of the attenuation of every active event that affects `band`.
pub fn rain_attenuation_db(events: &[RainEvent], band: Band, t_hours: f64) -> f64 {
    events
        .iter()
        .filter(|e| e.active_at(t_hours) && e.affected_bands.contains(&band))
        .map(|e| e.attenuation_db)
        .sum()
}

/// Normalized eMBB diurnal shape in `[1/peak_to_trough, 1]`: a raised cosine
/// rising from the trough hour to the peak hour and falling back over the
/// remainder of the day.
pub fn embb_shape(hour_of_day: f64, peak_hour: f64, trough_hour: f64, peak_to_trough: f64) -> f64 {
    let lo = 1.0 / peak_to_trough;
    let rise = (peak_hour - trough_hour).rem_euclid(24.0);
    let fall = 24.0 - rise;
    let since_trough = (hour_of_day - trough_hour).rem_euclid(24.0);
    let x = if since_trough <= rise {
        (1.0 - (PI * since_trough / rise).cos()) / 2.0
    } else {
        (1.0 + (PI * (since_trough - rise) / fall).cos()) / 2.0
    };
    lo + (1.0 - lo) * x
}

/// Work-hours bump in [0, 1] driving commuter mobility between zone classes.
pub fn commuter_weight(hour_of_day: f64) -> f64 {
    if (7.0..19.0).contains(&hour_of_day) {
        (PI * (hour_of_day - 7.0) / 12.0).sin().powi(2)
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
struct ZoneTraffic {
    class: ZoneClass,
    embb_peak_bps: f64,
    urllc_bps: f64,
    miot_bps: f64,
}

/// Deterministic traffic generator for one scenario and seed.
#[derive(Debug, Clone)]
pub struct TrafficModel {
    profiles: TrafficProfiles,
    zones: Vec<ZoneTraffic>,
    zone_ids: Vec<String>,
    tick_s: f64,
    ticks_per_hour: u64,
    urllc_target_ms: f64,
    seed: u64,
}

impl TrafficModel {
    pub fn new(spec: &ScenarioSpec, seed: u64) -> Self {
        let p = &spec.traffic_profiles;
        let zones = spec
            .zones
            .iter()
            .map(|z| ZoneTraffic {
                class: z.class,
                embb_peak_bps: p.embb.peak_bps.get(z.class),
                urllc_bps: if z.industrial { p.urllc.industrial_bps } else { p.urllc.other_bps },
                miot_bps: p.miot.mean_bps.get(z.class),
            })
            .collect();
        TrafficModel {
            profiles: p.clone(),
            zones,
            zone_ids: spec.zones.iter().map(|z| z.id.clone()).collect(),
            tick_s: f64::from(spec.epoch_minutes) * 60.0,
            ticks_per_hour: u64::from(spec.ticks_per_hour()),
            urllc_target_ms: spec.sla.urllc_latency_ms,
            seed,
        }
    }

    pub fn with_surge(mut self, surge: Option<SurgeSpec>) -> Self {
        self.profiles.surge = surge;
        self
    }

    pub fn zone_count(&self) -> usize {
        self.zones.len()
    }

    fn tick_mid_hours(&self, epoch: u64) -> f64 {
        (epoch as f64 + 0.5) / self.ticks_per_hour as f64
    }

    fn embb_factor(&self, zone: usize, t_hours: f64) -> f64 {
        let e = &self.profiles.embb;
        let z = &self.zones[zone];
        let hod = t_hours.rem_euclid(24.0);
        let shape = embb_shape(hod, e.peak_hour, e.trough_hour, e.peak_to_trough);
        let commute = match z.class {
            ZoneClass::Urban => 1.0 + e.commuter_shift * commuter_weight(hod),
            ZoneClass::Suburban => 1.0 - e.commuter_shift * commuter_weight(hod),
            ZoneClass::Rural => 1.0,
        };
        let surge = match &self.profiles.surge {
            Some(s) if z.class == s.zone_class && t_hours >= s.start_hour && t_hours < s.end_hour => s.multiplier,
            _ => 1.0,
        };
        z.embb_peak_bps * shape * commute * surge
    }

    /// Noiseless expected offered bits per class for one tick.
    pub fn expected_bits(&self, zone: usize, epoch: u64) -> [f64; 3] {
        let t = self.tick_mid_hours(epoch);
        let z = &self.zones[zone];
        [
            self.embb_factor(zone, t) * self.tick_s,
            z.urllc_bps * self.tick_s,
            z.miot_bps * self.tick_s,
        ]
    }

    /// Realized offered bits for every zone and class in one tick.
    pub fn fill_epoch(&self, epoch: u64, out: &mut [[f64; 3]]) {
        let mut rng = rng::stream(self.seed, rng::DOMAIN_TRAFFIC, epoch);
        let t = self.tick_mid_hours(epoch);
        let p = &self.profiles;
        let rate = p.miot.bursts_per_minute * self.tick_s / 60.0;
        let poisson = if rate > 0.0 { Poisson::new(rate).ok() } else { None };
        for (zi, z) in self.zones.iter().enumerate() {
            let ue: f64 = rng.random_range(-1.0..=1.0);
            let uu: f64 = rng.random_range(-1.0..=1.0);
            let bursts: f64 = poisson.as_ref().map_or(0.0, |d| d.sample(&mut rng));
            let embb = self.embb_factor(zi, t) * (1.0 + p.embb.noise * ue);
            let urllc = z.urllc_bps * (1.0 + p.urllc.noise * uu);
            let miot = if rate > 0.0 { z.miot_bps * bursts / rate } else { z.miot_bps };
            out[zi] = [
                (embb * self.tick_s).max(0.0),
                (urllc * self.tick_s).max(0.0),
                (miot * self.tick_s).max(0.0),
            ];
        }
    }

    pub fn generate(&self, epoch: u64) -> Vec<TrafficDemand> {
        let mut bits = vec![[0.0; 3]; self.zones.len()];
        self.fill_epoch(epoch, &mut bits);
        let mut out = Vec::with_capacity(bits.len() * 3);
        for (zi, b) in bits.iter().enumerate() {
            for class in TrafficClass::ALL {
                out.push(TrafficDemand {
                    epoch,
                    zone: self.zone_ids[zi].clone(),
                    class,
                    offered_bits: b[class.index()],
                    latency_target_ms: (class == TrafficClass::Urllc).then_some(self.urllc_target_ms),
                });
            }
        }
        out
    }
}

/// Demand for every zone and class in one epoch.
pub fn generate_traffic(spec: &ScenarioSpec, epoch: u64, seed: u64) -> Vec<TrafficDemand> {
    TrafficModel::new(spec, seed).generate(epoch)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonTracePoint {
    pub hour: u32,
    pub region: String,
    pub intensity_gco2_per_kwh: f64,
    pub renewable_fraction: f64,
}

pub const CARBON_HEADER: [&str; 4] = ["hour", "region", "intensity_gco2_per_kwh", "renewable_fraction"];

/// Reads a carbon trace CSV; hours must be contiguous from 0 for every region.
pub fn load_carbon_trace(path: impl AsRef<Path>) -> Result<Vec<CarbonTracePoint>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_carbon_trace(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse_carbon_trace(text: &str) -> Result<Vec<CarbonTracePoint>> {
    let parse_err = |message: String| Error::Parse {
        path: "<inline>".into(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != CARBON_HEADER {
        return Err(parse_err(format!("expected header {}", CARBON_HEADER.join(","))));
    }
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        if rec.len() != 4 {
            return Err(parse_err(format!("line {line}: expected 4 fields")));
        }
        let hour: u32 = rec[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("line {line}: bad hour '{}'", &rec[0])))?;
        let num = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(format!("line {line}: bad {what} '{s}'")))
        };
        let intensity = num(&rec[2], "intensity")?;
        let renewable = num(&rec[3], "renewable fraction")?;
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return Err(Error::Range {
                line,
                message: format!("intensity {intensity} must be non-negative"),
            });
        }
        if !(0.0..=1.0).contains(&renewable) {
            return Err(Error::Range {
                line,
                message: format!("renewable_fraction {renewable} outside [0, 1]"),
            });
        }
        points.push(CarbonTracePoint {
            hour,
            region: rec[1].to_string(),
            intensity_gco2_per_kwh: intensity,
            renewable_fraction: renewable,
        });
    }
    let trace = CarbonTrace::from_points(&points)?;
    Ok(trace.to_points())
}

pub fn write_carbon_trace(points: &[CarbonTracePoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", CARBON_HEADER.join(","))?;
    for p in points {
        writeln!(w, "{},{},{},{}", p.hour, p.region, p.intensity_gco2_per_kwh, p.renewable_fraction)?;
    }
    Ok(())
}

/// Synthesizes `days` of hourly points for one region: the profile's share
/// with bounded multiplicative noise, mapped to intensity affinely.
pub fn synth_carbon_trace<R: Rng>(
    profile: &RegionProfile,
    base_intensity: f64,
    floor_intensity: f64,
    noise: f64,
    days: u32,
    rng: &mut R,
) -> Vec<CarbonTracePoint> {
    let mut out = Vec::with_capacity(days as usize * 24);
    for hour in 0..days * 24 {
        let mean = profile.hourly_renewable[(hour % 24) as usize];
        let u: f64 = rng.random_range(-1.0..=1.0);
        let r = (mean * (1.0 + noise * u)).clamp(0.0, 1.0);
        out.push(CarbonTracePoint {
            hour,
            region: profile.region.clone(),
            intensity_gco2_per_kwh: intensity_from_renewable(r, base_intensity, floor_intensity),
            renewable_fraction: r,
        });
    }
    out
}

pub fn intensity_from_renewable(renewable: f64, base_intensity: f64, floor_intensity: f64) -> f64 {
    base_intensity * (1.0 - renewable) + floor_intensity
}

/// Dense hourly trace indexed by region then hour.
#[derive(Debug, Clone, PartialEq)]
pub struct CarbonTrace {
    pub regions: Vec<String>,
    pub hours: u32,
    intensity: Vec<f64>,
    renewable: Vec<f64>,
}

impl CarbonTrace {
    pub fn from_points(points: &[CarbonTracePoint]) -> Result<Self> {
        let mut regions: Vec<String> = Vec::new();
        for p in points {
            if !regions.contains(&p.region) {
                regions.push(p.region.clone());
            }
        }
        let hours = points.iter().map(|p| p.hour + 1).max().unwrap_or(0);
        let n = regions.len() * hours as usize;
        let mut intensity = vec![f64::NAN; n];
        let mut renewable = vec![f64::NAN; n];
        for p in points {
            let r = regions.iter().position(|x| *x == p.region).expect("region collected");
            let idx = r * hours as usize + p.hour as usize;
            if !intensity[idx].is_nan() {
                return Err(Error::Parse {
                    path: "<inline>".into(),
                    message: format!("duplicate point for hour {} region '{}'", p.hour, p.region),
                });
            }
            intensity[idx] = p.intensity_gco2_per_kwh;
            renewable[idx] = p.renewable_fraction;
        }
        for h in 0..hours {
            for (r, name) in regions.iter().enumerate() {
                if intensity[r * hours as usize + h as usize].is_nan() {
                    return Err(Error::Gap {
                        hour: h,
                        region: name.clone(),
                    });
                }
            }
        }
        Ok(CarbonTrace {
            regions,
            hours,
            intensity,
            renewable,
        })
    }

    /// Points in hour-major order.
    pub fn to_points(&self) -> Vec<CarbonTracePoint> {
        let mut out = Vec::with_capacity(self.intensity.len());
        for h in 0..self.hours {
            for (r, name) in self.regions.iter().enumerate() {
                out.push(CarbonTracePoint {
                    hour: h,
                    region: name.clone(),
                    intensity_gco2_per_kwh: self.intensity(r, h),
                    renewable_fraction: self.renewable(r, h),
                });
            }
        }
        out
    }

    pub fn region_index(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == name)
    }

    #[inline]
    pub fn intensity(&self, region: usize, hour: u32) -> f64 {
        self.intensity[region * self.hours as usize + hour as usize]
    }

    #[inline]
    pub fn renewable(&self, region: usize, hour: u32) -> f64 {
        self.renewable[region * self.hours as usize + hour as usize]
    }

    fn hour_of(&self, t_hours: f64) -> Result<u32> {
        if !(t_hours >= 0.0) || t_hours >= f64::from(self.hours) {
            return Err(Error::OutOfRange {
                t_hours,
                horizon_hours: self.hours,
            });
        }
        Ok(t_hours.floor() as u32)
    }

    /// Intensity held constant over each hour.
    pub fn carbon_intensity_at(&self, region: &str, t_hours: f64) -> Result<f64> {
        let r = self
            .region_index(region)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown region '{region}'")))?;
        Ok(self.intensity(r, self.hour_of(t_hours)?))
    }

    pub fn renewable_share_at(&self, region: &str, t_hours: f64) -> Result<f64> {
        let r = self
            .region_index(region)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown region '{region}'")))?;
        Ok(self.renewable(r, self.hour_of(t_hours)?))
    }

    /// Copy with every intensity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = self.clone();
        for x in &mut t.intensity {
            *x *= factor;
        }
        t
    }

    pub fn max_intensity(&self) -> f64 {
        self.intensity.iter().copied().fold(0.0, f64::max)
    }

    /// Reorders regions to `order`; every listed region must be present.
    pub fn reordered(&self, order: &[String]) -> Result<Self> {
        let h = self.hours as usize;
        let mut intensity = Vec::with_capacity(order.len() * h);
        let mut renewable = Vec::with_capacity(order.len() * h);
        for name in order {
            let r = self.region_index(name).ok_or_else(|| Error::Gap {
                hour: 0,
                region: name.clone(),
            })?;
            intensity.extend_from_slice(&self.intensity[r * h..(r + 1) * h]);
            renewable.extend_from_slice(&self.renewable[r * h..(r + 1) * h]);
        }
        Ok(CarbonTrace {
            regions: order.to_vec(),
            hours: self.hours,
            intensity,
            renewable,
        })
    }
}

/// The realized carbon trace of a scenario: synthesized per region from the
/// seed, or loaded from file (relative paths resolve against `base_dir`).
pub fn scenario_carbon_trace(spec: &ScenarioSpec, seed: u64, base_dir: Option<&Path>) -> Result<CarbonTrace> {
    let trace = match &spec.carbon_source {
        CarbonSource::Synthetic(s) => {
            let mut points = Vec::new();
            for (i, profile) in s.profiles.iter().enumerate() {
                let mut rng = rng::stream(seed, rng::DOMAIN_CARBON, i as u64);
                points.extend(synth_carbon_trace(
                    profile,
                    s.base_intensity,
                    s.floor_intensity,
                    s.noise,
                    spec.days,
                    &mut rng,
                ));
            }
            CarbonTrace::from_points(&points)?
        }
        CarbonSource::File { path, .. } => {
            let p = Path::new(path);
            let full = match base_dir {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p.to_path_buf(),
            };
            CarbonTrace::from_points(&load_carbon_trace(full)?)?
        }
    };
    let trace = trace.reordered(&spec.regions)?;
    if trace.hours < spec.horizon_hours() {
        return Err(Error::Gap {
            hour: trace.hours,
            region: spec.regions[0].clone(),
        });
    }
    Ok(trace)
}
