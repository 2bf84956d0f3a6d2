//! Run loop: plan each day, execute hourly configurations with optional
//! per-tick corrective actions, record KPIs, and summarize.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::BITS_PER_GB;
use crate::engine::{step, Accum, Compiled, Exogenous, Model, SimState, TickOut, World};
use crate::environment::{scenario_carbon_trace, RainEvent};
use crate::error::{Error, Result};
use crate::orchestration::baseline::Baselines;
use crate::orchestration::lattice::{static_config, Lattice};
use crate::orchestration::mpc::Mpc;
use crate::orchestration::rl::{apply_action, feature_names, mask_of, propose_actions, reward, rl_features, RlAgent};
use crate::orchestration::{ActionKind, DayPlan, HourConfig, PolicyKind};
use crate::rng;
use crate::twin::{day_ahead_forecast, Forecast, History, HOURS_PER_DAY};

/// Measurements of one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub tick_minute: u64,
    pub offered_bits: [f64; 3],
    pub served_bits: [f64; 3],
    /// Bits-weighted p95 latency per class.
    pub p95_ms: [f64; 3],
    pub p95_all_ms: f64,
    /// RAN, satellite, UAV, edge.
    pub energy_kwh: [f64; 4],
    pub emissions_g: f64,
    pub renewable_kwh: f64,
    pub class_violations: [u32; 3],
    pub sla_violations: u32,
    pub action: Option<ActionKind>,
}

impl KpiRecord {
    pub fn from_tick(o: &TickOut, minutes_per_tick: u64, action: Option<ActionKind>) -> Self {
        KpiRecord {
            tick_minute: o.tick * minutes_per_tick,
            offered_bits: o.offered,
            served_bits: o.served,
            p95_ms: o.p95,
            p95_all_ms: o.p95_all,
            energy_kwh: o.layer_kwh,
            emissions_g: o.emissions_g,
            renewable_kwh: o.renewable_kwh,
            class_violations: o.class_violations,
            sla_violations: o.sla_violations,
            action,
        }
    }

    pub fn total_kwh(&self) -> f64 {
        self.energy_kwh.iter().sum()
    }
}

/// Produces the configuration for each hour.
pub trait HourPolicy {
    fn begin_day(&mut self, _day: u32, _state: &SimState, _forecast: &Forecast) -> Result<()> {
        Ok(())
    }
    fn hour_config(&mut self, hour: u32, state: &SimState, world: &World, forecast: &Forecast) -> Result<HourConfig>;
}

/// Replays a fixed list of hourly configurations.
pub struct PlanPolicy(pub Vec<HourConfig>);

impl HourPolicy for PlanPolicy {
    fn hour_config(&mut self, hour: u32, _: &SimState, _: &World, _: &Forecast) -> Result<HourConfig> {
        self.0.get(hour as usize).cloned().ok_or(Error::HorizonMismatch {
            plan: self.0.len(),
            forecast: hour as usize + 1,
        })
    }
}

/// Static, QoS-only or energy-only.
pub struct BaselinePolicy<'a> {
    model: &'a Model,
    kind: PolicyKind,
    baselines: Baselines<'a>,
    fixed: HourConfig,
    current: Option<HourConfig>,
}

impl<'a> BaselinePolicy<'a> {
    pub fn new(model: &'a Model, kind: PolicyKind) -> Result<Self> {
        let lattice = Lattice::new(model)?;
        Ok(BaselinePolicy {
            model,
            kind,
            baselines: Baselines::new(model, &lattice),
            fixed: static_config(model),
            current: None,
        })
    }
}

impl HourPolicy for BaselinePolicy<'_> {
    fn hour_config(&mut self, hour: u32, state: &SimState, world: &World, forecast: &Forecast) -> Result<HourConfig> {
        if self.kind == PolicyKind::Static {
            return Ok(self.fixed.clone());
        }
        let interval = self.model.spec.decision_interval_hours.max(1);
        if let Some(c) = &self.current {
            if !hour.is_multiple_of(interval) {
                return Ok(c.clone());
            }
        }
        let m = self.model;
        let local = hour - forecast.start_hour;
        let traffic = vec![(0..m.zones).map(|z| forecast.traffic_hour(local, z)).collect::<Vec<_>>()];
        let carbon = vec![vec![(0.0, 0.0); m.regions]];
        let tick = u64::from(hour) * m.ticks_per_hour;
        let rain = if tick == 0 { [0.0; 2] } else { world.rain_db(tick - 1) };
        let hour_view = Forecast::from_hourly(m, hour, &traffic, &carbon, rain)?;
        let cfg = self.baselines.decide(self.kind, state, &hour_view)?;
        self.current = Some(cfg.clone());
        Ok(cfg)
    }
}

/// Day-ahead beam-search planner.
pub struct MpcPolicy<'a> {
    mpc: Mpc<'a>,
    beam_width: usize,
    plan: Option<DayPlan>,
    day_start: u32,
    pub plans: Vec<DayPlan>,
}

impl<'a> MpcPolicy<'a> {
    pub fn new(model: &'a Model) -> Result<Self> {
        let lattice = Lattice::new(model)?;
        Ok(MpcPolicy {
            mpc: Mpc::new(model, &lattice),
            beam_width: model.spec.orchestration.beam_width,
            plan: None,
            day_start: 0,
            plans: Vec::new(),
        })
    }
}

impl HourPolicy for MpcPolicy<'_> {
    fn begin_day(&mut self, _day: u32, state: &SimState, forecast: &Forecast) -> Result<()> {
        let plan = self.mpc.plan(state, forecast, self.beam_width, None)?;
        self.plans.push(plan.clone());
        self.plan = Some(plan);
        self.day_start = forecast.start_hour;
        Ok(())
    }

    fn hour_config(&mut self, hour: u32, _: &SimState, _: &World, _: &Forecast) -> Result<HourConfig> {
        let plan = self.plan.as_ref().ok_or_else(|| Error::Config("no plan for the day".into()))?;
        Ok(plan.configs[(hour - self.day_start) as usize].clone())
    }
}

/// What a controller updates while it acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Learning {
    /// Frozen weights, greedy actions.
    Off,
    /// Exploring policy, only the critic learns.
    Critic,
    /// Exploring policy, actor and critic learn.
    Full,
}

/// Per-tick controller attached to a run.
pub struct RlRuntime<'a> {
    pub agent: &'a mut RlAgent,
    pub learn: Learning,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DriveOptions {
    pub record: bool,
    pub checkpoints: bool,
    /// Stop after this many hours.
    pub hours: Option<u32>,
}

/// Everything a drive produced.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub kpis: Vec<KpiRecord>,
    /// Configuration planned for each hour (before corrective actions).
    pub configs: Vec<HourConfig>,
    /// Configuration in force from the given tick on, after each corrective action.
    pub corrections: Vec<(u64, HourConfig)>,
    /// State at the start of every hour.
    pub checkpoints: Vec<SimState>,
    pub total: Accum,
    pub td_abs_sum: f64,
}

/// The PDCA loop over the whole horizon.
pub fn drive(
    model: &Model,
    world: &World,
    policy: &mut dyn HourPolicy,
    mut rl: Option<&mut RlRuntime>,
    opts: DriveOptions,
) -> Result<Trace> {
    let history = History::of(model, world);
    let total_hours = (model.total_ticks / model.ticks_per_hour) as u32;
    let hours = opts.hours.map_or(total_hours, |h| h.min(total_hours));
    let minutes = u64::from(model.spec.epoch_minutes);
    let mut state = SimState::initial(model);
    let mut out = TickOut::new(model);
    let mut trace = Trace::default();
    if opts.record {
        trace.kpis.reserve((u64::from(hours) * model.ticks_per_hour) as usize);
    }
    let mut forecast: Option<Forecast> = None;
    let mut features = Vec::with_capacity(32);
    let mut next_features = Vec::with_capacity(32);
    let mut expected = vec![0.0; model.zones];
    let mut intensity = vec![0.0; model.regions];
    for hour in 0..hours {
        if hour % HOURS_PER_DAY as u32 == 0 {
            let day = hour / HOURS_PER_DAY as u32;
            let f = day_ahead_forecast(model, world, &history, day)?;
            policy.begin_day(day, &state, &f)?;
            forecast = Some(f);
        }
        let f = forecast.as_ref().expect("forecast issued at day start");
        if opts.checkpoints {
            trace.checkpoints.push(state.clone());
        }
        let mut cfg = policy.hour_config(hour, &state, world, f)?;
        cfg.check(&model.topo)?;
        if opts.record || opts.checkpoints {
            trace.configs.push(cfg.clone());
        }
        let mut compiled = Compiled::new(model, &cfg);
        let local = hour - f.start_hour;
        for (z, e) in expected.iter_mut().enumerate() {
            *e = f.traffic_hour(local, z).iter().sum::<f64>() / 3600.0;
        }
        for _ in 0..model.ticks_per_hour {
            let t = state.tick;
            let mut taken = None;
            let mut mask = [true; 8];
            if let Some(rt) = rl.as_deref_mut() {
                for (r, i) in intensity.iter_mut().enumerate() {
                    *i = world.carbon(t, r).0;
                }
                let mw = if t == 0 {
                    0.0
                } else {
                    world.rain_db(t - 1)[crate::engine::RAIN_MW]
                };
                let proposals = propose_actions(model, &state, &cfg, &intensity, mw);
                mask = mask_of(&proposals);
                rl_features(model, &state, &expected, &intensity, rt.agent.carbon_scale, &mut features);
                let kind = if rt.learn != Learning::Off {
                    rt.agent.act(&features, &mask, &mut rt.rng)?
                } else {
                    rt.agent.greedy(&features, &mask)?
                };
                if kind != ActionKind::NoOp {
                    if let Some(action) = &proposals[kind.index()] {
                        apply_action(model, &mut cfg, &state, action);
                        compiled = Compiled::new(model, &cfg);
                        if opts.record {
                            trace.corrections.push((t, cfg.clone()));
                        }
                    }
                }
                taken = Some(kind);
            }
            step(model, world, &mut state, &compiled, &mut out);
            trace.total.add(&out);
            if let (Some(rt), Some(kind)) = (rl.as_deref_mut(), taken) {
                if rt.learn != Learning::Off {
                    let r = reward(&out, rt.agent.sla_penalty);
                    rl_features(model, &state, &expected, &intensity, rt.agent.carbon_scale, &mut next_features);
                    let delta = if rt.learn == Learning::Full {
                        rt.agent.update(&features, kind, r, &next_features, &mask)?
                    } else {
                        rt.agent.update_critic(&features, r, &next_features)?
                    };
                    trace.td_abs_sum += delta.abs();
                }
            }
            if opts.record {
                trace.kpis.push(KpiRecord::from_tick(&out, minutes, taken));
            }
        }
    }
    Ok(trace)
}

/// Outcome of one rain event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub start_hour: f64,
    pub end_hour: f64,
    pub baseline_p95_ms: f64,
    /// Mean network p95 over the event ticks.
    pub p95_ms: f64,
    pub recovery_s: Option<f64>,
    pub sla_violations: u64,
}

/// Energy by layer, kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerKwh {
    pub ran: f64,
    pub satellite: f64,
    pub uav: f64,
    pub edge: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassValues {
    pub embb: f64,
    pub urllc: f64,
    pub miot: f64,
    pub all: f64,
}

/// Run totals; every field derives from the KPI series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub policy: String,
    pub seed: u64,
    pub ticks: u64,
    pub offered_gb: ClassValues,
    pub served_gb: ClassValues,
    pub energy_kwh: LayerKwh,
    pub emissions_g: f64,
    pub gco2_per_gb: Option<f64>,
    pub renewable_kwh: f64,
    pub renewable_utilization: Option<f64>,
    /// Mean of per-tick p95 latency.
    pub p95_ms: ClassValues,
    pub sla_violations: u64,
    pub events: Vec<EventSummary>,
    pub zero_traffic: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub policy: PolicyKind,
    pub seed: u64,
    pub kpis: Vec<KpiRecord>,
    pub configs: Vec<HourConfig>,
    pub corrections: Vec<(u64, HourConfig)>,
    pub summary: Summary,
}

/// Seconds from onset until the p95 series stays at or below
/// `threshold * baseline` for `hold_ticks` consecutive ticks. The baseline is
/// the mean p95 over the hour before onset. `None` if it never recovers.
pub fn recovery_time(p95: &[f64], tick_minutes: f64, event: &RainEvent, threshold: f64, hold_ticks: usize) -> Result<Option<f64>> {
    let tph = 60.0 / tick_minutes;
    let onset = (event.start_hour * tph).round() as usize;
    if onset >= p95.len() {
        return Err(Error::EventNotFound(onset));
    }
    let base = pre_event_baseline(p95, onset, tph as usize);
    let limit = threshold * base;
    let hold = hold_ticks.max(1);
    let mut run = 0;
    for k in onset..p95.len() {
        if p95[k] <= limit {
            run += 1;
            if run >= hold {
                let start = k + 1 - run;
                return Ok(Some((start - onset) as f64 * tick_minutes * 60.0));
            }
        } else {
            run = 0;
        }
    }
    Ok(None)
}

fn pre_event_baseline(p95: &[f64], onset: usize, window: usize) -> f64 {
    let from = onset.saturating_sub(window);
    if from == onset {
        return p95[onset];
    }
    p95[from..onset].iter().sum::<f64>() / (onset - from) as f64
}

/// Recomputes the run summary from a KPI series.
pub fn summarize(policy: PolicyKind, seed: u64, kpis: &[KpiRecord], model: &Model, events: &[RainEvent]) -> Result<Summary> {
    let mut off = [0.0; 3];
    let mut srv = [0.0; 3];
    let mut layer = [0.0; 4];
    let mut em = 0.0;
    let mut ren = 0.0;
    let mut p95 = [0.0; 3];
    let mut p95_all = 0.0;
    let mut viol = 0u64;
    for k in kpis {
        for c in 0..3 {
            off[c] += k.offered_bits[c];
            srv[c] += k.served_bits[c];
            p95[c] += k.p95_ms[c];
        }
        for l in 0..4 {
            layer[l] += k.energy_kwh[l];
        }
        em += k.emissions_g;
        ren += k.renewable_kwh;
        p95_all += k.p95_all_ms;
        viol += u64::from(k.sla_violations);
    }
    let n = kpis.len().max(1) as f64;
    let gb = |v: [f64; 3]| ClassValues {
        embb: v[0] / BITS_PER_GB,
        urllc: v[1] / BITS_PER_GB,
        miot: v[2] / BITS_PER_GB,
        all: (v[0] + v[1] + v[2]) / BITS_PER_GB,
    };
    let total_kwh = layer[0] + layer[1] + layer[2] + layer[3];
    let served_gb = gb(srv);
    let tick_minutes = f64::from(model.spec.epoch_minutes);
    let series: Vec<f64> = kpis.iter().map(|k| k.p95_all_ms).collect();
    let o = &model.spec.orchestration;
    let hold = (f64::from(o.recovery_hold_minutes) / tick_minutes).ceil() as usize;
    let tph = (60.0 / tick_minutes) as usize;
    let mut ev = Vec::new();
    for e in events {
        let onset = (e.start_hour * tph as f64).round() as usize;
        let end = ((e.end_hour * tph as f64).round() as usize).min(kpis.len());
        if onset >= kpis.len() {
            continue;
        }
        let span = &kpis[onset..end.max(onset + 1).min(kpis.len())];
        ev.push(EventSummary {
            start_hour: e.start_hour,
            end_hour: e.end_hour,
            baseline_p95_ms: pre_event_baseline(&series, onset, tph),
            p95_ms: span.iter().map(|k| k.p95_all_ms).sum::<f64>() / span.len() as f64,
            recovery_s: recovery_time(&series, tick_minutes, e, o.recovery_threshold, hold)?,
            sla_violations: span.iter().map(|k| u64::from(k.sla_violations)).sum(),
        });
    }
    Ok(Summary {
        policy: policy.name().to_string(),
        seed,
        ticks: kpis.len() as u64,
        offered_gb: gb(off),
        energy_kwh: LayerKwh {
            ran: layer[0],
            satellite: layer[1],
            uav: layer[2],
            edge: layer[3],
            total: total_kwh,
        },
        emissions_g: em,
        gco2_per_gb: (served_gb.all > 0.0).then(|| em / served_gb.all),
        renewable_kwh: ren,
        renewable_utilization: (total_kwh > 0.0).then(|| ren / total_kwh),
        p95_ms: ClassValues {
            embb: p95[0] / n,
            urllc: p95[1] / n,
            miot: p95[2] / n,
            all: p95_all / n,
        },
        served_gb,
        sla_violations: viol,
        events: ev,
        zero_traffic: off.iter().sum::<f64>() <= 0.0,
    })
}

/// Runs one policy on a prepared world.
pub fn run_world(model: &Model, world: &World, policy: PolicyKind, agent: Option<&RlAgent>) -> Result<RunResult> {
    let opts = DriveOptions {
        record: true,
        ..Default::default()
    };
    let trace = match policy {
        PolicyKind::Static | PolicyKind::QosOnly | PolicyKind::EnergyOnly => {
            drive(model, world, &mut BaselinePolicy::new(model, policy)?, None, opts)?
        }
        PolicyKind::Mpc => drive(model, world, &mut MpcPolicy::new(model)?, None, opts)?,
        PolicyKind::MpcRl => {
            let mut agent = agent
                .ok_or_else(|| Error::MissingPolicyFile("mpc_rl needs trained weights".into()))?
                .clone();
            check_agent(model, &agent)?;
            let mut rt = RlRuntime {
                agent: &mut agent,
                learn: Learning::Off,
                rng: rng::stream(world.seed, rng::DOMAIN_RL, 0),
            };
            drive(model, world, &mut MpcPolicy::new(model)?, Some(&mut rt), opts)?
        }
    };
    let summary = summarize(policy, world.seed, &trace.kpis, model, &world.rain_events)?;
    Ok(RunResult {
        policy,
        seed: world.seed,
        kpis: trace.kpis,
        configs: trace.configs,
        corrections: trace.corrections,
        summary,
    })
}

/// Replays an hourly plan with an optional frozen controller.
pub fn run_plan(model: &Model, world: &World, plan: &[HourConfig], agent: Option<&RlAgent>, policy: PolicyKind) -> Result<RunResult> {
    let opts = DriveOptions {
        record: true,
        ..Default::default()
    };
    let mut pp = PlanPolicy(plan.to_vec());
    let trace = match agent {
        Some(a) => {
            let mut agent = a.clone();
            check_agent(model, &agent)?;
            let mut rt = RlRuntime {
                agent: &mut agent,
                learn: Learning::Off,
                rng: rng::stream(world.seed, rng::DOMAIN_RL, 0),
            };
            drive(model, world, &mut pp, Some(&mut rt), opts)?
        }
        None => drive(model, world, &mut pp, None, opts)?,
    };
    let summary = summarize(policy, world.seed, &trace.kpis, model, &world.rain_events)?;
    Ok(RunResult {
        policy,
        seed: world.seed,
        kpis: trace.kpis,
        configs: trace.configs,
        corrections: trace.corrections,
        summary,
    })
}

fn check_agent(model: &Model, agent: &RlAgent) -> Result<()> {
    let names = feature_names(model);
    if agent.features != names {
        return Err(Error::DimensionMismatch {
            expected: names.len(),
            got: agent.features.len(),
        });
    }
    Ok(())
}

/// Builds the model and world for a scenario and runs one policy.
pub fn run(model: &Model, policy: PolicyKind, seed: u64, agent: Option<&RlAgent>, base_dir: Option<&Path>) -> Result<RunResult> {
    let world = World::new(model, seed, base_dir)?;
    run_world(model, &world, policy, agent)
}

/// Hourly configurations the day-ahead planner chooses on a world.
pub fn mpc_configs(model: &Model, world: &World) -> Result<Vec<HourConfig>> {
    let opts = DriveOptions {
        record: true,
        ..Default::default()
    };
    Ok(drive(model, world, &mut MpcPolicy::new(model)?, None, opts)?.configs)
}

/// Per-episode training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: u32,
    pub seed: u64,
    pub exploration: f64,
    pub gco2_per_gb: f64,
    pub sla_violations: u64,
    pub mean_abs_td: f64,
}

/// Shifts every rain event to a random whole-hour start inside the horizon.
pub fn randomized_events(events: &[RainEvent], horizon_hours: u32, rng: &mut ChaCha8Rng) -> Vec<RainEvent> {
    events
        .iter()
        .map(|e| {
            let dur = e.end_hour - e.start_hour;
            let latest = (f64::from(horizon_hours) - dur).floor().max(1.0) as u32;
            let start = f64::from(rng.random_range(1..=latest));
            RainEvent {
                start_hour: start,
                end_hour: start + dur,
                ..e.clone()
            }
        })
        .collect()
}

/// The untrained starting point of training: uniform random actor weights.
pub fn initial_agent(model: &Model, carbon_scale: f64, seed: u64) -> RlAgent {
    let mut r = rng::stream(seed, rng::DOMAIN_RL, u64::MAX);
    RlAgent::random(feature_names(model), &model.spec.orchestration.rl, carbon_scale, &mut r)
}

/// Trains the controller on re-seeded worlds replaying a fixed hourly plan.
pub fn train_rl(
    model: &Model,
    plan: &[HourConfig],
    seed: u64,
    episodes: u32,
    base_dir: Option<&Path>,
) -> Result<(RlAgent, Vec<EpisodeLog>)> {
    let cfg = &model.spec.orchestration.rl;
    let base = World::new(model, seed, base_dir)?;
    let mut agent = initial_agent(model, base.trace.max_intensity(), seed);
    let mut logs = Vec::with_capacity(episodes as usize);
    let hours = cfg.episode_days.min(model.spec.days) * HOURS_PER_DAY as u32;
    let total_hours = model.spec.horizon_hours();
    for ep in 0..episodes {
        let ep_seed = rng::derive(seed, rng::DOMAIN_EPISODE, u64::from(ep));
        let mut erng = rng::stream(seed, rng::DOMAIN_EPISODE, u64::from(ep));
        let events = if cfg.randomize_events {
            randomized_events(&model.spec.rain_events, hours.min(total_hours), &mut erng)
        } else {
            model.spec.rain_events.clone()
        };
        let surge = model.spec.traffic_profiles.surge.clone().map(|mut s| {
            if cfg.randomize_events {
                if let Some(e) = events.last() {
                    let d = s.end_hour - s.start_hour;
                    s.start_hour = e.start_hour;
                    s.end_hour = e.start_hour + d;
                }
            }
            s
        });
        let trace = scenario_carbon_trace(&model.spec, ep_seed, base_dir)?;
        let world = World::build(model, ep_seed, trace, events, surge);
        let frac = if episodes > 1 {
            f64::from(ep) / f64::from(episodes - 1)
        } else {
            1.0
        };
        agent.exploration = cfg.exploration_start + (cfg.exploration_end - cfg.exploration_start) * frac;
        let mut rt = RlRuntime {
            agent: &mut agent,
            learn: if ep < cfg.critic_warmup_episodes {
                Learning::Critic
            } else {
                Learning::Full
            },
            rng: ChaCha8Rng::seed_from_u64(rng::derive(ep_seed, rng::DOMAIN_RL, 1)),
        };
        let tr = drive(
            model,
            &world,
            &mut PlanPolicy(plan.to_vec()),
            Some(&mut rt),
            DriveOptions {
                hours: Some(hours),
                ..Default::default()
            },
        )?;
        let gb = tr.total.served.iter().sum::<f64>() / BITS_PER_GB;
        logs.push(EpisodeLog {
            episode: ep,
            seed: ep_seed,
            exploration: agent.exploration,
            gco2_per_gb: if gb > 0.0 { tr.total.emissions_g / gb } else { 0.0 },
            sla_violations: tr.total.sla_violations,
            mean_abs_td: tr.td_abs_sum / tr.total.ticks.max(1) as f64,
        });
        agent.trained_episodes += 1;
    }
    agent.exploration = cfg.exploration_end;
    Ok((agent, logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::RainEvent;
    use crate::linkmodel::Band;

    fn event(start: f64) -> RainEvent {
        RainEvent {
            start_hour: start,
            end_hour: start + 1.0,
            affected_bands: vec![Band::Ka],
            attenuation_db: 15.0,
        }
    }

    #[test]
    fn flat_series_recovers_immediately() {
        let p = vec![10.0; 300];
        assert_eq!(recovery_time(&p, 1.0, &event(2.0), 1.5, 5).unwrap(), Some(0.0));
    }

    #[test]
    fn three_minute_spike_recovers_in_180_s() {
        let mut p = vec![10.0; 300];
        for v in &mut p[120..123] {
            *v = 100.0;
        }
        assert_eq!(recovery_time(&p, 1.0, &event(2.0), 1.5, 5).unwrap(), Some(180.0));
    }

    #[test]
    fn never_recovering_series() {
        let mut p = vec![10.0; 300];
        for v in &mut p[120..] {
            *v = 100.0;
        }
        assert_eq!(recovery_time(&p, 1.0, &event(2.0), 1.5, 5).unwrap(), None);
    }

    #[test]
    fn event_after_run_is_not_found() {
        let p = vec![10.0; 60];
        assert!(matches!(recovery_time(&p, 1.0, &event(5.0), 1.5, 5), Err(Error::EventNotFound(_))));
    }
}
