//! Digital twin: day-ahead forecasts and plan evaluation.
//!
//! Evaluation drives [`engine::step`] against forecast inputs, so a forecast
//! built from realized inputs reproduces the simulator bit for bit.

use serde::{Deserialize, Serialize};

use crate::engine::{step, Accum, Compiled, Exogenous, Model, SimState, TickOut, World};
use crate::environment::URLLC;
use crate::error::{Error, Result};
use crate::orchestration::HourConfig;

pub const HOURS_PER_DAY: usize = 24;

/// Forecast exogenous inputs over a window of whole hours.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub start_hour: u32,
    pub horizon_hours: u32,
    ticks_per_hour: u64,
    zones: usize,
    regions: usize,
    /// Per tick and zone.
    demand: Vec<[f64; 3]>,
    /// Per tick.
    rain: Vec<[f64; 2]>,
    /// Per hour and region: (intensity, renewable share).
    carbon: Vec<(f64, f64)>,
}

impl Forecast {
    /// Builds a forecast from hourly traffic (bits per hour, spread evenly over
    /// ticks), hourly carbon and a constant rain level.
    pub fn from_hourly(
        model: &Model,
        start_hour: u32,
        traffic: &[Vec<[f64; 3]>],
        carbon: &[Vec<(f64, f64)>],
        rain_db: [f64; 2],
    ) -> Result<Self> {
        let hours = traffic.len();
        if carbon.len() != hours {
            return Err(Error::HorizonMismatch {
                plan: hours,
                forecast: carbon.len(),
            });
        }
        let tph = model.ticks_per_hour;
        let mut demand = Vec::with_capacity(hours * tph as usize * model.zones);
        for row in traffic {
            if row.len() != model.zones {
                return Err(Error::DimensionMismatch {
                    expected: model.zones,
                    got: row.len(),
                });
            }
            for _ in 0..tph {
                demand.extend(row.iter().map(|b| [b[0] / tph as f64, b[1] / tph as f64, b[2] / tph as f64]));
            }
        }
        let mut flat = Vec::with_capacity(hours * model.regions);
        for row in carbon {
            if row.len() != model.regions {
                return Err(Error::DimensionMismatch {
                    expected: model.regions,
                    got: row.len(),
                });
            }
            flat.extend(row.iter().map(|&(i, r)| (i.max(0.0), r.clamp(0.0, 1.0))));
        }
        Ok(Forecast {
            start_hour,
            horizon_hours: hours as u32,
            ticks_per_hour: tph,
            zones: model.zones,
            regions: model.regions,
            demand,
            rain: vec![rain_db; hours * tph as usize],
            carbon: flat,
        })
    }

    /// A forecast that equals the given inputs tick for tick.
    pub fn realized<E: Exogenous + ?Sized>(model: &Model, exo: &E, start_hour: u32, hours: u32) -> Self {
        let tph = model.ticks_per_hour;
        let t0 = u64::from(start_hour) * tph;
        let t1 = t0 + u64::from(hours) * tph;
        let mut demand = Vec::with_capacity(((t1 - t0) as usize) * model.zones);
        let mut rain = Vec::with_capacity((t1 - t0) as usize);
        for t in t0..t1 {
            for z in 0..model.zones {
                demand.push(exo.demand(t, z));
            }
            rain.push(exo.rain_db(t));
        }
        let mut carbon = Vec::with_capacity(hours as usize * model.regions);
        for h in 0..u64::from(hours) {
            for r in 0..model.regions {
                carbon.push(exo.carbon(t0 + h * tph, r));
            }
        }
        Forecast {
            start_hour,
            horizon_hours: hours,
            ticks_per_hour: tph,
            zones: model.zones,
            regions: model.regions,
            demand,
            rain,
            carbon,
        }
    }

    pub fn start_tick(&self) -> u64 {
        u64::from(self.start_hour) * self.ticks_per_hour
    }

    pub fn end_tick(&self) -> u64 {
        self.start_tick() + u64::from(self.horizon_hours) * self.ticks_per_hour
    }

    /// Forecast bits for an hour of the window (0-based) and zone.
    pub fn traffic_hour(&self, hour: u32, zone: usize) -> [f64; 3] {
        let mut s = [0.0; 3];
        let t0 = u64::from(hour) * self.ticks_per_hour;
        for t in t0..t0 + self.ticks_per_hour {
            let d = self.demand[t as usize * self.zones + zone];
            for c in 0..3 {
                s[c] += d[c];
            }
        }
        s
    }

    /// Forecast (intensity, renewable share) for an hour of the window and region.
    pub fn carbon_hour(&self, hour: u32, region: usize) -> (f64, f64) {
        self.carbon[hour as usize * self.regions + region]
    }

    pub fn with_scaled_carbon(&self, factor: f64) -> Self {
        let mut f = self.clone();
        for c in &mut f.carbon {
            c.0 *= factor;
        }
        f
    }

    /// Mean over the window of the cleanest region's forecast intensity.
    pub fn mean_min_intensity(&self) -> f64 {
        let h = self.horizon_hours as usize;
        if h == 0 || self.regions == 0 {
            return 0.0;
        }
        let sum: f64 = (0..h)
            .map(|i| {
                self.carbon[i * self.regions..(i + 1) * self.regions]
                    .iter()
                    .map(|c| c.0)
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        sum / h as f64
    }
}

impl Exogenous for Forecast {
    #[inline]
    fn demand(&self, tick: u64, zone: usize) -> [f64; 3] {
        self.demand[(tick - self.start_tick()) as usize * self.zones + zone]
    }

    #[inline]
    fn rain_db(&self, tick: u64) -> [f64; 2] {
        self.rain[(tick - self.start_tick()) as usize]
    }

    #[inline]
    fn carbon(&self, tick: u64, region: usize) -> (f64, f64) {
        let h = (tick - self.start_tick()) / self.ticks_per_hour;
        self.carbon[h as usize * self.regions + region]
    }
}

/// A view that hides carbon data from policies that must not use it.
pub struct CarbonBlind<'a, E: Exogenous + ?Sized>(pub &'a E);

impl<E: Exogenous + ?Sized> Exogenous for CarbonBlind<'_, E> {
    fn demand(&self, tick: u64, zone: usize) -> [f64; 3] {
        self.0.demand(tick, zone)
    }

    fn rain_db(&self, tick: u64) -> [f64; 2] {
        self.0.rain_db(tick)
    }

    fn carbon(&self, _: u64, _: usize) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// Seasonal-naive traffic forecast blended with a same-hour EWMA level.
///
/// `history[h][zone]` holds bits offered in hour `h`. The prediction for each
/// hour is `(1 - blend) * y_last + blend * level`, where `y_last` is the same
/// hour of the most recent complete day and `level` the EWMA over all
/// complete days at that hour.
pub fn forecast_traffic(history: &[Vec<[f64; 3]>], horizon_hours: u32, blend: f64, alpha: f64) -> Result<Vec<Vec<[f64; 3]>>> {
    let days = history.len() / HOURS_PER_DAY;
    if days == 0 {
        return Err(Error::InsufficientHistory {
            needed: HOURS_PER_DAY,
            got: history.len(),
        });
    }
    let zones = history[0].len();
    let next = history.len();
    let mut out = Vec::with_capacity(horizon_hours as usize);
    for k in 0..horizon_hours as usize {
        let hod = (next + k) % HOURS_PER_DAY;
        let mut row = vec![[0.0; 3]; zones];
        for (z, cell) in row.iter_mut().enumerate() {
            for c in 0..3 {
                let mut level = history[hod][z][c];
                for d in 1..days {
                    level += alpha * (history[d * HOURS_PER_DAY + hod][z][c] - level);
                }
                let last = history[(days - 1) * HOURS_PER_DAY + hod][z][c];
                cell[c] = (last + blend * (level - last)).max(0.0);
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Day-ahead persistence: each hour repeats the same hour of the most recent complete day.
pub fn forecast_carbon(history: &[Vec<(f64, f64)>], horizon_hours: u32) -> Result<Vec<Vec<(f64, f64)>>> {
    let days = history.len() / HOURS_PER_DAY;
    if days == 0 {
        return Err(Error::InsufficientHistory {
            needed: HOURS_PER_DAY,
            got: history.len(),
        });
    }
    let next = history.len();
    Ok((0..horizon_hours as usize)
        .map(|k| {
            let hod = (next + k) % HOURS_PER_DAY;
            history[(days - 1) * HOURS_PER_DAY + hod]
                .iter()
                .map(|&(i, r)| (i.max(0.0), r.clamp(0.0, 1.0)))
                .collect()
        })
        .collect())
}

/// Hourly observed series of a world, used as forecaster history.
#[derive(Debug, Clone)]
pub struct History {
    pub traffic: Vec<Vec<[f64; 3]>>,
    pub carbon: Vec<Vec<(f64, f64)>>,
}

impl History {
    pub fn of(model: &Model, world: &World) -> Self {
        let hours = (model.total_ticks / model.ticks_per_hour) as usize;
        let tph = model.ticks_per_hour;
        let mut traffic = vec![vec![[0.0; 3]; model.zones]; hours];
        let mut carbon = vec![vec![(0.0, 0.0); model.regions]; hours];
        for (h, (row, crow)) in traffic.iter_mut().zip(carbon.iter_mut()).enumerate() {
            let t0 = h as u64 * tph;
            for t in t0..t0 + tph {
                for (z, cell) in row.iter_mut().enumerate() {
                    let d = world.demand(t, z);
                    for c in 0..3 {
                        cell[c] += d[c];
                    }
                }
            }
            for (r, cell) in crow.iter_mut().enumerate() {
                *cell = world.carbon(t0, r);
            }
        }
        History { traffic, carbon }
    }
}

/// Day-ahead forecast issued at the start of `day`.
///
/// On the first day the traffic forecast is the noiseless expected profile and
/// the carbon forecast is that day's published trace. Rain persists at the
/// level observed on the tick before issue.
pub fn day_ahead_forecast(model: &Model, world: &World, history: &History, day: u32) -> Result<Forecast> {
    let o = &model.spec.orchestration;
    let horizon = o.horizon_hours as u32;
    let start_hour = day * HOURS_PER_DAY as u32;
    let total_hours = (model.total_ticks / model.ticks_per_hour) as u32;
    let horizon = horizon.min(total_hours - start_hour);
    let tph = model.ticks_per_hour;
    let (traffic, carbon) = if day == 0 {
        let traffic = (0..horizon)
            .map(|h| {
                (0..model.zones)
                    .map(|z| {
                        let mut s = [0.0; 3];
                        for t in u64::from(h) * tph..u64::from(h + 1) * tph {
                            let e = world.traffic.expected_bits(z, t);
                            for c in 0..3 {
                                s[c] += e[c];
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        let carbon = history.carbon[..horizon as usize].to_vec();
        (traffic, carbon)
    } else {
        let past = start_hour as usize;
        (
            forecast_traffic(&history.traffic[..past], horizon, o.forecast_blend, o.forecast_ewma_alpha)?,
            forecast_carbon(&history.carbon[..past], horizon)?,
        )
    };
    let issue = u64::from(start_hour) * tph;
    let rain = if issue == 0 { [0.0; 2] } else { world.rain_db(issue - 1) };
    Forecast::from_hourly(model, start_hour, &traffic, &carbon, rain)
}

/// Predicted outcome of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ScenarioResult {
    pub hours: u32,
    pub emissions_g: f64,
    /// Energy by layer: RAN, satellite, UAV, edge.
    pub energy_kwh: [f64; 4],
    pub renewable_kwh: f64,
    pub served_fraction: f64,
    /// Mean per-tick p95 latency per class (eMBB, URLLC, mIoT).
    pub p95_ms: [f64; 3],
    pub sla_violations: u64,
    /// Window hours (0-based) in which some zone missed its served-fraction
    /// threshold or URLLC exceeded its latency target.
    pub risk_hours: Vec<u32>,
}

impl ScenarioResult {
    pub fn from_accum(acc: &Accum, hours: u32, risk_hours: Vec<u32>) -> Self {
        let n = acc.ticks.max(1) as f64;
        ScenarioResult {
            hours,
            emissions_g: acc.emissions_g,
            energy_kwh: acc.layer_kwh,
            renewable_kwh: acc.renewable_kwh,
            served_fraction: acc.served_fraction(),
            p95_ms: [acc.p95_class_sum[0] / n, acc.p95_class_sum[1] / n, acc.p95_class_sum[2] / n],
            sla_violations: acc.sla_violations,
            risk_hours,
        }
    }

    pub fn total_kwh(&self) -> f64 {
        self.energy_kwh.iter().sum()
    }
}

/// Outcome of one twin hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourReport {
    pub feasible: bool,
    pub emissions_g: f64,
    pub kwh: f64,
    pub served_fraction: f64,
    pub mean_p95: f64,
    pub violations: u64,
}

/// Incremental twin evaluation; clone to branch.
#[derive(Debug, Clone)]
pub struct TwinRun {
    pub state: SimState,
    pub acc: Accum,
    pub hours: u32,
    pub risk_hours: Vec<u32>,
}

impl TwinRun {
    pub fn new(state: SimState) -> Self {
        TwinRun {
            state,
            acc: Accum::default(),
            hours: 0,
            risk_hours: Vec::new(),
        }
    }

    /// Simulates one hour under `cfg`.
    pub fn advance_hour<E: Exogenous + ?Sized>(&mut self, model: &Model, exo: &E, cfg: &Compiled, out: &mut TickOut) -> HourReport {
        let before = self.acc.clone();
        let mut zone_off = vec![[0.0; 3]; model.zones];
        let mut zone_srv = vec![[0.0; 3]; model.zones];
        let mut urllc_p95: f64 = 0.0;
        let mut p95 = 0.0;
        for _ in 0..model.ticks_per_hour {
            step(model, exo, &mut self.state, cfg, out);
            self.acc.add(out);
            p95 += out.p95_all;
            urllc_p95 = urllc_p95.max(out.p95[URLLC]);
            for z in 0..model.zones {
                for c in 0..3 {
                    zone_off[z][c] += out.zone_offered[z][c];
                    zone_srv[z][c] += out.zone_served[z][c];
                }
            }
        }
        let sla = &model.spec.sla;
        let thr = [sla.embb_served_fraction, sla.urllc_served_fraction, sla.miot_served_fraction];
        let served_ok = zone_off
            .iter()
            .zip(&zone_srv)
            .all(|(o, s)| (0..3).all(|c| o[c] <= 0.0 || s[c] >= thr[c] * o[c]));
        let latency_ok = urllc_p95 <= model.spec.orchestration.latency_margin * sla.urllc_latency_ms;
        let feasible = served_ok && latency_ok;
        if !feasible {
            self.risk_hours.push(self.hours);
        }
        self.hours += 1;
        let off: f64 = zone_off.iter().flatten().sum();
        let srv: f64 = zone_srv.iter().flatten().sum();
        HourReport {
            feasible,
            emissions_g: self.acc.emissions_g - before.emissions_g,
            kwh: self.acc.total_kwh() - before.total_kwh(),
            served_fraction: if off > 0.0 { srv / off } else { 1.0 },
            mean_p95: p95 / model.ticks_per_hour as f64,
            violations: self.acc.sla_violations - before.sla_violations,
        }
    }

    pub fn result(&self) -> ScenarioResult {
        ScenarioResult::from_accum(&self.acc, self.hours, self.risk_hours.clone())
    }
}

/// Evaluates an hourly plan from `start` against any exogenous source.
/// The start state is not modified.
pub fn evaluate_on<E: Exogenous + ?Sized>(model: &Model, start: &SimState, plan: &[HourConfig], exo: &E) -> ScenarioResult {
    let mut run = TwinRun::new(start.clone());
    let mut out = TickOut::new(model);
    for cfg in plan {
        run.advance_hour(model, exo, &Compiled::new(model, cfg), &mut out);
    }
    run.result()
}

/// Evaluates an hourly plan against a forecast window that must cover it.
pub fn evaluate_plan(model: &Model, start: &SimState, plan: &[HourConfig], forecast: &Forecast) -> Result<ScenarioResult> {
    let end = start.tick + plan.len() as u64 * model.ticks_per_hour;
    if start.tick < forecast.start_tick() || end > forecast.end_tick() {
        return Err(Error::HorizonMismatch {
            plan: plan.len(),
            forecast: forecast.horizon_hours as usize,
        });
    }
    Ok(evaluate_on(model, start, plan, forecast))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(days: usize) -> Vec<Vec<[f64; 3]>> {
        (0..days * 24)
            .map(|h| vec![[(h % 24) as f64 * 10.0, 1.0, 2.0 + (h % 24) as f64]])
            .collect()
    }

    #[test]
    fn periodic_traffic_is_forecast_exactly() {
        let h = periodic(3);
        let f = forecast_traffic(&h, 24, 0.3, 0.3).unwrap();
        for (k, row) in f.iter().enumerate() {
            assert_eq!(row[0], h[k][0]);
        }
    }

    #[test]
    fn short_history_is_rejected() {
        let h = periodic(1)[..10].to_vec();
        assert!(matches!(
            forecast_traffic(&h, 24, 0.3, 0.3),
            Err(Error::InsufficientHistory { needed: 24, got: 10 })
        ));
        let c: Vec<Vec<(f64, f64)>> = vec![vec![(1.0, 0.5)]; 10];
        assert!(matches!(forecast_carbon(&c, 24), Err(Error::InsufficientHistory { .. })));
    }

    #[test]
    fn step_change_lands_between_yesterday_and_recent_mean() {
        // day 1 at 100, day 2 at 200
        let h: Vec<Vec<[f64; 3]>> = (0..48).map(|i| vec![[if i < 24 { 100.0 } else { 200.0 }; 3]]).collect();
        let f = forecast_traffic(&h, 24, 0.3, 0.3).unwrap();
        // level = 0.3 * 200 + 0.7 * 100 = 130; forecast = 0.7 * 200 + 0.3 * 130 = 179
        let level = 0.3 * 200.0 + 0.7 * 100.0;
        let expect = 0.7 * 200.0 + 0.3 * level;
        assert!((f[0][0][0] - expect).abs() < 1e-12);
        assert!(f[0][0][0] < 200.0 && f[0][0][0] > level);
    }

    #[test]
    fn carbon_persistence_repeats_the_dip() {
        let day: Vec<Vec<(f64, f64)>> = (0..24)
            .map(|h| {
                vec![(
                    if (10..15).contains(&h) { 100.0 } else { 400.0 },
                    if (10..15).contains(&h) { 1.2 } else { 0.1 },
                )]
            })
            .collect();
        let f = forecast_carbon(&day, 24).unwrap();
        for h in 0..24 {
            assert_eq!(f[h][0].0, day[h][0].0);
            assert!((0.0..=1.0).contains(&f[h][0].1));
        }
    }
}
