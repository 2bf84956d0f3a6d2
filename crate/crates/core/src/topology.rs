//! Network geometry: the Walker constellation on circular orbits, the
//! planar metropolitan region with its zones, radio sites, gateways, UAVs
//! and swap pads, and satellite visibility from ground points.
//!
//! The region is a local plane in km anchored at a geodetic point. Ground
//! points are lifted onto the sphere with an equirectangular map; satellite
//! ground tracks are projected back with an azimuthal-equidistant map about
//! the anchor. The Earth does not rotate under the orbits.

use serde::{Deserialize, Serialize};

use crate::config::{GeoAnchor, ScenarioSpec, ZoneClass};
use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const MU_KM3_S2: f64 = 398_600.441_8;

fn km_per_deg() -> f64 {
    EARTH_RADIUS_KM * std::f64::consts::PI / 180.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteNode {
    pub id: usize,
    pub plane_index: u32,
    pub slot_index: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub phase_deg: f64,
}

fn norm_deg(x: f64) -> f64 {
    let v = x.rem_euclid(360.0);
    if v >= 360.0 {
        0.0
    } else {
        v
    }
}

/// Walker constellation with the RAAN spread over 360 degrees and no inter-plane phasing.
pub fn build_constellation(planes: u32, sats_per_plane: u32, altitude_km: f64, inclination_deg: f64) -> Result<Vec<SatelliteNode>> {
    build_walker(planes, sats_per_plane, altitude_km, inclination_deg, 360.0, 0)
}

/// Walker constellation with an explicit RAAN spread and phasing factor `f`.
pub fn build_walker(
    planes: u32,
    sats_per_plane: u32,
    altitude_km: f64,
    inclination_deg: f64,
    raan_spread_deg: f64,
    f: u32,
) -> Result<Vec<SatelliteNode>> {
    if planes < 1 || sats_per_plane < 1 {
        return Err(Error::InvalidParameter(format!(
            "constellation needs positive counts (planes {planes}, per plane {sats_per_plane})"
        )));
    }
    if !(altitude_km > 0.0) {
        return Err(Error::InvalidParameter(format!("altitude {altitude_km} km must be positive")));
    }
    let total = planes * sats_per_plane;
    let mut out = Vec::with_capacity(total as usize);
    for p in 0..planes {
        for s in 0..sats_per_plane {
            let raan = raan_spread_deg * f64::from(p) / f64::from(planes);
            let phase = 360.0 * f64::from(s) / f64::from(sats_per_plane) + 360.0 * f64::from(f * p) / f64::from(total);
            out.push(SatelliteNode {
                id: out.len(),
                plane_index: p,
                slot_index: s,
                altitude_km,
                inclination_deg,
                raan_deg: norm_deg(raan),
                phase_deg: norm_deg(phase),
            });
        }
    }
    Ok(out)
}

pub fn orbital_period_s(altitude_km: f64) -> Result<f64> {
    if !(altitude_km > 0.0) {
        return Err(Error::InvalidParameter(format!("altitude {altitude_km} km must be positive")));
    }
    let a = EARTH_RADIUS_KM + altitude_km;
    Ok(2.0 * std::f64::consts::PI * (a * a * a / MU_KM3_S2).sqrt())
}

/// Precomputed orbit basis: position = cos(theta) p + sin(theta) q.
#[derive(Debug, Clone, Copy)]
pub struct Orbit {
    p: [f64; 3],
    q: [f64; 3],
    phase0: f64,
    rate: f64,
    radius_ratio: f64,
}

impl Orbit {
    pub fn of(sat: &SatelliteNode) -> Self {
        let raan = sat.raan_deg.to_radians();
        let inc = sat.inclination_deg.to_radians();
        let period = orbital_period_s(sat.altitude_km).expect("validated altitude");
        Orbit {
            p: [raan.cos(), raan.sin(), 0.0],
            q: [-raan.sin() * inc.cos(), raan.cos() * inc.cos(), inc.sin()],
            phase0: sat.phase_deg.to_radians(),
            rate: 2.0 * std::f64::consts::PI / period,
            radius_ratio: EARTH_RADIUS_KM / (EARTH_RADIUS_KM + sat.altitude_km),
        }
    }

    /// Unit vector towards the satellite at `t_s` seconds.
    #[inline]
    pub fn unit(&self, t_s: f64) -> [f64; 3] {
        let (s, c) = (self.phase0 + self.rate * t_s).sin_cos();
        [
            c * self.p[0] + s * self.q[0],
            c * self.p[1] + s * self.q[1],
            c * self.p[2] + s * self.q[2],
        ]
    }

    /// Elevation (degrees) seen from the ground point with unit vector `g`.
    #[inline]
    pub fn elevation_deg(&self, g: &[f64; 3], t_s: f64) -> f64 {
        let u = self.unit(t_s);
        let cos_g = (u[0] * g[0] + u[1] * g[1] + u[2] * g[2]).clamp(-1.0, 1.0);
        let sin_g = (1.0 - cos_g * cos_g).max(0.0).sqrt();
        (cos_g - self.radius_ratio).atan2(sin_g).to_degrees()
    }
}

pub fn satellite_unit_vector(sat: &SatelliteNode, t_s: f64) -> [f64; 3] {
    Orbit::of(sat).unit(t_s)
}

fn unit_from_latlon(lat_deg: f64, lon_deg: f64) -> [f64; 3] {
    let (lat, lon) = (lat_deg.to_radians(), lon_deg.to_radians());
    [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
}

/// Unit vector of a planar point (km) under the scenario's anchor.
pub fn ground_unit(geo: &GeoAnchor, pos_km: [f64; 2]) -> [f64; 3] {
    let lat = geo.center_lat_deg + (pos_km[1] - geo.center_km[1]) / km_per_deg();
    let lon = geo.center_lon_deg + (pos_km[0] - geo.center_km[0]) / (km_per_deg() * geo.center_lat_deg.to_radians().cos());
    unit_from_latlon(lat, lon)
}

/// Sub-satellite point of `sat` at `t_s`, projected onto the scenario plane.
pub fn satellite_ground_track(sat: &SatelliteNode, t_s: f64, geo: &GeoAnchor) -> [f64; 2] {
    let u = satellite_unit_vector(sat, t_s);
    let lat = u[2].clamp(-1.0, 1.0).asin();
    let lon = u[1].atan2(u[0]);
    let lat0 = geo.center_lat_deg.to_radians();
    let lon0 = geo.center_lon_deg.to_radians();
    let a = unit_from_latlon(geo.center_lat_deg, geo.center_lon_deg);
    let c = (u[0] * a[0] + u[1] * a[1] + u[2] * a[2]).clamp(-1.0, 1.0).acos();
    let dlon = lon - lon0;
    let az = (dlon.sin() * lat.cos()).atan2(lat0.cos() * lat.sin() - lat0.sin() * lat.cos() * dlon.cos());
    let d = EARTH_RADIUS_KM * c;
    [geo.center_km[0] + d * az.sin(), geo.center_km[1] + d * az.cos()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub class: ZoneClass,
    pub region: usize,
    pub centroid: [f64; 2],
    pub industrial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteKind {
    Macro,
    Small,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrestrialSite {
    pub id: String,
    pub kind: SiteKind,
    pub zone: usize,
    pub position: [f64; 2],
    pub sleep_capable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UavMode {
    Grounded,
    Cruise,
    Hover,
    Standby,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavNode {
    pub id: String,
    pub position: [f64; 2],
    pub battery_wh: f64,
    pub capacity_wh: f64,
    pub endurance_h: f64,
    pub coverage_km: f64,
    pub mode: UavMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayNode {
    pub id: String,
    pub region: usize,
    pub position: [f64; 2],
    pub compute_capacity: f64,
    pub throughput_bps: f64,
    pub hosts_edge: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pad {
    pub position: [f64; 2],
    pub region: usize,
}

pub fn distance_km(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// All static network elements of a scenario.
#[derive(Debug, Clone)]
pub struct Topology {
    pub geo: GeoAnchor,
    pub zones: Vec<Zone>,
    pub sites: Vec<TerrestrialSite>,
    /// Site indices per zone: (macros, small cells).
    pub zone_sites: Vec<(Vec<usize>, Vec<usize>)>,
    pub gateways: Vec<GatewayNode>,
    pub satellites: Vec<SatelliteNode>,
    pub orbits: Vec<Orbit>,
    pub pads: Vec<Pad>,
    pub uavs: Vec<UavNode>,
    pub min_elevation_deg: f64,
    zone_units: Vec<[f64; 3]>,
    gateway_units: Vec<[f64; 3]>,
}

impl Topology {
    pub fn build(spec: &ScenarioSpec) -> Result<Self> {
        let region = |name: &str| {
            spec.region_index(name)
                .ok_or_else(|| Error::Config(format!("unknown region '{name}'")))
        };
        let mut zones = Vec::new();
        let mut sites = Vec::new();
        let mut zone_sites = Vec::new();
        for (zi, z) in spec.zones.iter().enumerate() {
            zones.push(Zone {
                id: z.id.clone(),
                class: z.class,
                region: region(&z.region)?,
                centroid: z.centroid_km,
                industrial: z.industrial,
            });
            let mut ring = |kind: SiteKind, n: u32, radius: f64| -> Vec<usize> {
                (0..n)
                    .map(|i| {
                        let a = 2.0 * std::f64::consts::PI * f64::from(i) / f64::from(n.max(1));
                        let prefix = if kind == SiteKind::Macro { "m" } else { "s" };
                        sites.push(TerrestrialSite {
                            id: format!("{}-{prefix}{i}", z.id),
                            kind,
                            zone: zi,
                            position: [z.centroid_km[0] + radius * a.cos(), z.centroid_km[1] + radius * a.sin()],
                            sleep_capable: true,
                        });
                        sites.len() - 1
                    })
                    .collect()
            };
            let m = ring(SiteKind::Macro, z.macro_sites, 3.0);
            let s = ring(SiteKind::Small, z.small_cells, 1.0);
            zone_sites.push((m, s));
        }
        let gateways = spec
            .gateways
            .sites
            .iter()
            .map(|g| {
                Ok(GatewayNode {
                    id: g.id.clone(),
                    region: region(&g.region)?,
                    position: g.position_km,
                    compute_capacity: g.compute_capacity,
                    throughput_bps: g.throughput_bps,
                    hosts_edge: g.compute_capacity > 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let c = &spec.constellation;
        let satellites = build_walker(
            c.planes,
            c.sats_per_plane,
            c.altitude_km,
            c.inclination_deg,
            c.raan_spread_deg,
            c.phasing,
        )?;
        let orbits = satellites.iter().map(Orbit::of).collect();
        let pads = spec
            .uavs
            .swap_pads
            .iter()
            .map(|p| {
                Ok(Pad {
                    position: p.position_km,
                    region: region(&p.region)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let hover_w = spec.power_catalog.uav.uav_hover_w.unwrap_or(spec.power_catalog.uav.active_w);
        let capacity_wh = spec.uavs.endurance_h * hover_w;
        let uavs = (0..spec.uavs.count as usize)
            .map(|i| UavNode {
                id: format!("uav{i}"),
                position: pads[i % pads.len()].position,
                battery_wh: capacity_wh,
                capacity_wh,
                endurance_h: spec.uavs.endurance_h,
                coverage_km: spec.uavs.coverage_km,
                mode: UavMode::Grounded,
            })
            .collect();
        let zone_units = zones.iter().map(|z| ground_unit(&spec.geo, z.centroid)).collect();
        let gateway_units = gateways.iter().map(|g| ground_unit(&spec.geo, g.position)).collect();
        Ok(Topology {
            geo: spec.geo.clone(),
            zones,
            sites,
            zone_sites,
            gateways,
            satellites,
            orbits,
            pads,
            uavs,
            min_elevation_deg: c.min_elevation_deg,
            zone_units,
            gateway_units,
        })
    }

    pub fn zone_unit(&self, zone: usize) -> &[f64; 3] {
        &self.zone_units[zone]
    }

    pub fn gateway_unit(&self, gateway: usize) -> &[f64; 3] {
        &self.gateway_units[gateway]
    }

    pub fn nearest_pad(&self, pos: [f64; 2]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.pads.iter().enumerate() {
            let d = distance_km(pos, p.position);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Gateways sorted by distance from a zone, ties broken by index.
    pub fn gateways_by_distance(&self, zone: usize) -> Vec<usize> {
        let c = self.zones[zone].centroid;
        let mut idx: Vec<usize> = (0..self.gateways.len()).collect();
        idx.sort_by(|&a, &b| {
            distance_km(c, self.gateways[a].position)
                .total_cmp(&distance_km(c, self.gateways[b].position))
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Satellites at or above the elevation mask from a zone centroid.
pub fn visible_satellites(topology: &Topology, zone: usize, t_s: f64, min_elevation_deg: f64) -> Vec<usize> {
    let g = topology.zone_unit(zone);
    topology
        .orbits
        .iter()
        .enumerate()
        .filter(|(_, o)| o.elevation_deg(g, t_s) >= min_elevation_deg)
        .map(|(i, _)| i)
        .collect()
}

pub const NO_SATELLITE: u16 = u16::MAX;

/// Highest satellite per ground point and tick; points are zones then gateways.
#[derive(Debug, Clone)]
pub struct SkyTable {
    points: usize,
    best: Vec<(u16, f64)>,
}

impl SkyTable {
    pub fn build(topology: &Topology, ticks: u64, tick_s: f64) -> Self {
        let units: Vec<[f64; 3]> = topology.zone_units.iter().chain(&topology.gateway_units).copied().collect();
        let points = units.len();
        let mut best = Vec::with_capacity(points * ticks as usize);
        for tick in 0..ticks {
            let t = tick as f64 * tick_s;
            for g in &units {
                let mut b = (NO_SATELLITE, f64::NEG_INFINITY);
                for (i, o) in topology.orbits.iter().enumerate() {
                    let el = o.elevation_deg(g, t);
                    if el > b.1 {
                        b = (i as u16, el);
                    }
                }
                if b.1 < topology.min_elevation_deg {
                    b.0 = NO_SATELLITE;
                }
                best.push(b);
            }
        }
        SkyTable { points, best }
    }

    pub fn ticks(&self) -> u64 {
        (self.best.len() / self.points.max(1)) as u64
    }

    #[inline]
    pub fn zone_best(&self, tick: u64, zone: usize) -> (u16, f64) {
        self.best[tick as usize * self.points + zone]
    }

    #[inline]
    pub fn gateway_best(&self, tick: u64, zones: usize, gateway: usize) -> (u16, f64) {
        self.best[tick as usize * self.points + zones + gateway]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_paper_scenario;

    #[test]
    fn reference_constellation_spacing() {
        let sats = build_walker(6, 12, 600.0, 53.0, 180.0, 0).unwrap();
        assert_eq!(sats.len(), 72);
        assert!((sats[12].raan_deg - sats[0].raan_deg - 30.0).abs() < 1e-12);
        assert!((sats[1].phase_deg - sats[0].phase_deg - 30.0).abs() < 1e-12);
    }

    #[test]
    fn single_satellite_at_origin() {
        let sats = build_constellation(1, 1, 600.0, 53.0).unwrap();
        assert_eq!(sats.len(), 1);
        assert_eq!((sats[0].raan_deg, sats[0].phase_deg), (0.0, 0.0));
    }

    #[test]
    fn small_star_plane_one_raan() {
        let sats = build_walker(2, 3, 600.0, 53.0, 180.0, 0).unwrap();
        assert_eq!(sats.len(), 6);
        assert_eq!(sats[3].plane_index, 1);
        assert!((sats[3].raan_deg - 90.0).abs() < 1e-12);
        let global = build_constellation(2, 3, 600.0, 53.0).unwrap();
        assert!((global[3].raan_deg - 180.0).abs() < 1e-12);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(build_constellation(0, 12, 600.0, 53.0).is_err());
        assert!(build_constellation(6, 0, 600.0, 53.0).is_err());
    }

    #[test]
    fn angles_normalized() {
        for s in build_walker(7, 9, 600.0, 53.0, 360.0, 3).unwrap() {
            assert!((0.0..360.0).contains(&s.raan_deg));
            assert!((0.0..360.0).contains(&s.phase_deg));
        }
    }

    #[test]
    fn kepler_periods() {
        let t = orbital_period_s(600.0).unwrap();
        let a: f64 = 6971.0;
        let oracle = 2.0 * std::f64::consts::PI * (a.powi(3) / 398_600.441_8).sqrt();
        assert!((t - oracle).abs() < 1e-9);
        assert!((t - 5792.0).abs() < 1.0, "{t}");
        let geo = orbital_period_s(35_786.0).unwrap();
        assert!((geo - 86_164.0).abs() < 30.0, "{geo}");
        assert!(orbital_period_s(1200.0).unwrap() > t);
        assert!(orbital_period_s(0.0).is_err());
    }

    #[test]
    fn ground_track_is_periodic() {
        let spec = default_paper_scenario();
        let sats = build_constellation(6, 12, 600.0, 53.0).unwrap();
        let t = orbital_period_s(600.0).unwrap();
        for s in sats.iter().step_by(7) {
            for t0 in [0.0, 123.4, 4000.0] {
                let a = satellite_ground_track(s, t0, &spec.geo);
                let b = satellite_ground_track(s, t0 + t, &spec.geo);
                assert!(distance_km(a, b) < 1e-6, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn opposite_slots_are_antipodal() {
        let sats = build_constellation(1, 2, 600.0, 53.0).unwrap();
        for t in [0.0, 500.0, 2345.6] {
            let a = satellite_unit_vector(&sats[0], t);
            let b = satellite_unit_vector(&sats[1], t);
            for k in 0..3 {
                assert!((a[k] + b[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quarter_orbit_advances_ninety_degrees() {
        let sat = &build_constellation(1, 1, 600.0, 53.0).unwrap()[0];
        let t = orbital_period_s(600.0).unwrap();
        let a = satellite_unit_vector(sat, 0.0);
        let b = satellite_unit_vector(sat, t / 4.0);
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!(dot.abs() < 1e-12);
    }

    fn topo() -> Topology {
        Topology::build(&default_paper_scenario()).unwrap()
    }

    #[test]
    fn topology_counts() {
        let t = topo();
        assert_eq!(t.satellites.len(), 72);
        assert_eq!(t.sites.iter().filter(|s| s.kind == SiteKind::Macro).count(), 60);
        assert_eq!(t.sites.iter().filter(|s| s.kind == SiteKind::Small).count(), 120);
        assert_eq!(t.uavs.len(), 24);
        assert_eq!(t.gateways.len(), 8);
        assert_eq!(t.pads.len(), 6);
        assert!(t.sites.iter().all(|s| s.kind != SiteKind::Small || s.sleep_capable));
        assert!(t.uavs.iter().all(|u| u.battery_wh == u.capacity_wh));
    }

    #[test]
    fn overhead_mask_and_subsatellite_point() {
        let mut t = topo();
        // ninety degrees admits nothing unless something is exactly overhead
        for tick in 0..50 {
            assert!(visible_satellites(&t, 0, tick as f64 * 60.0, 90.0).len() <= 1);
        }
        // place zone 0 under satellite 5 at t = 1000 s
        let u = t.orbits[5].unit(1000.0);
        t.zone_units[0] = u;
        assert!(visible_satellites(&t, 0, 1000.0, 0.0).contains(&5));
        assert!((t.orbits[5].elevation_deg(&u, 1000.0) - 90.0).abs() < 1e-9);
    }

    #[test]
    fn visibility_monotone_in_mask() {
        let t = topo();
        for tick in (0..200).step_by(13) {
            let ts = tick as f64 * 60.0;
            for z in 0..t.zones.len() {
                let lo = visible_satellites(&t, z, ts, 5.0);
                let hi = visible_satellites(&t, z, ts, 25.0);
                assert!(hi.iter().all(|s| lo.contains(s)));
            }
        }
    }

    #[test]
    fn default_constellation_covers_every_zone_every_hour() {
        let spec = default_paper_scenario();
        let t = topo();
        let mut gaps = 0;
        for hour in 0..24 {
            for z in 0..t.zones.len() {
                // independent sweep: recompute from the satellite list
                let g = ground_unit(&spec.geo, t.zones[z].centroid);
                let r = EARTH_RADIUS_KM / (EARTH_RADIUS_KM + 600.0);
                let seen = t.satellites.iter().any(|s| {
                    let u = satellite_unit_vector(s, hour as f64 * 3600.0);
                    let c: f64 = u.iter().zip(&g).map(|(a, b)| a * b).sum();
                    let el = ((c - r) / (1.0 - c * c).sqrt()).atan().to_degrees();
                    el >= 10.0
                });
                if !seen {
                    gaps += 1;
                }
            }
        }
        assert_eq!(gaps, 0);
    }

    #[test]
    fn sky_table_matches_direct_search() {
        let t = topo();
        let sky = SkyTable::build(&t, 30, 60.0);
        for tick in 0..30u64 {
            for z in 0..t.zones.len() {
                let (id, el) = sky.zone_best(tick, z);
                let vis = visible_satellites(&t, z, tick as f64 * 60.0, el);
                assert_eq!(vis, vec![id as usize]);
            }
        }
    }
}
