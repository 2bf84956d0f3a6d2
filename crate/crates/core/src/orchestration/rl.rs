//! Real-time corrective controller: linear actor-critic over telemetry features.
//!
//! Each tick the controller may apply one [`Action`] on top of the hourly
//! plan. Every action kind has a deterministic parameter rule; kinds whose
//! rule finds nothing to do are masked.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RlConfig;
use crate::energy::{SleepMode, BITS_PER_GB};
use crate::engine::{Model, SimState, TickOut, UavTask};
use crate::environment::MIOT;
use crate::error::{Error, Result};
use crate::orchestration::{Action, ActionKind, ActionParams, Handover, HourConfig, Placement};

/// Ground utilization above which a zone counts as congested.
const HOT: f64 = 0.9;
/// Ground utilization below which spare UAVs are recalled.
const COLD: f64 = 0.5;
/// Highest gateway utilization a reroute may create.
const REROUTE_FILL: f64 = 0.9;

/// Feature names in vector order.
pub fn feature_names(model: &Model) -> Vec<String> {
    let mut v = vec!["hour_sin".to_string(), "hour_cos".to_string()];
    v.extend(model.topo.zones.iter().map(|z| format!("load_dev_{}", z.id)));
    v.extend(model.spec.regions.iter().map(|r| format!("carbon_{r}")));
    v.extend(["rain", "uav_available", "p95_latency", "bias"].map(String::from));
    v
}

pub fn feature_dim(model: &Model) -> usize {
    6 + model.zones + model.regions
}

/// Telemetry features, each clamped to [-1, 1].
///
/// `expected_bps` is the forecast offered load per zone for the current hour,
/// `intensity` the current carbon intensity per region and `carbon_scale` its
/// normalizer.
pub fn rl_features(model: &Model, state: &SimState, expected_bps: &[f64], intensity: &[f64], carbon_scale: f64, out: &mut Vec<f64>) {
    out.clear();
    let hod = (state.tick % (24 * model.ticks_per_hour)) as f64 / model.ticks_per_hour as f64;
    out.push((TAU * hod / 24.0).sin());
    out.push((TAU * hod / 24.0).cos());
    for z in 0..model.zones {
        let e = expected_bps[z];
        let o = state.obs.zone_offered_bps[z];
        let dev = if e > 0.0 {
            (o - e) / e
        } else if o > 0.0 {
            1.0
        } else {
            0.0
        };
        out.push(dev.clamp(-1.0, 1.0));
    }
    for &i in intensity {
        out.push(if carbon_scale > 0.0 {
            (i / carbon_scale).clamp(-1.0, 1.0)
        } else {
            0.0
        });
    }
    out.push(if state.obs.rain { 1.0 } else { 0.0 });
    let fleet = state.uavs.len();
    out.push(if fleet > 0 { state.idle_uavs() as f64 / fleet as f64 } else { 0.0 });
    out.push((state.obs.p95_all / model.spec.links.saturation_latency_ms).clamp(-1.0, 1.0));
    out.push(1.0);
}

fn active_capacity(model: &Model, cfg: &HourConfig, z: usize) -> f64 {
    let m = model.zone_macros[z]
        .iter()
        .filter(|&&i| cfg.macro_power_mode[i] == SleepMode::Active)
        .count();
    let s = model.zone_smalls[z]
        .iter()
        .filter(|&&i| cfg.small_cell_sleep[i] == SleepMode::Active)
        .count();
    m as f64 * model.macro_cap[z] + s as f64 * model.small_cap[z]
}

fn pick<F: Fn(usize) -> Option<f64>>(zones: usize, key: F, largest: bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for z in 0..zones {
        if let Some(k) = key(z) {
            let better = match best {
                None => true,
                Some((_, b)) => {
                    if largest {
                        k > b
                    } else {
                        k < b
                    }
                }
            };
            if better {
                best = Some((z, k));
            }
        }
    }
    best.map(|b| b.0)
}

/// The concrete action each kind would take now, or `None` when masked.
pub fn propose_actions(model: &Model, state: &SimState, cfg: &HourConfig, intensity: &[f64], mw_rain_db: f64) -> [Option<Action>; 8] {
    let obs = &state.obs;
    let zones = model.zones;
    let mk = |kind, params| Some(Action { kind, params });
    let mut out: [Option<Action>; 8] = Default::default();
    out[ActionKind::NoOp.index()] = Some(Action::no_op());

    // when a zone is stuck behind its transport or gateway, rebuild the
    // serving map greedily: biggest zones first, nearest gateway that fits
    let cap = |g: usize| model.topo.gateways[g].throughput_bps;
    let stuck = (0..zones).any(|z| {
        let g = cfg.serving_gateway[z];
        obs.zone_violations[z] != 0 && (model.transport_capacity(z, g, mw_rain_db) < obs.zone_offered_bps[z] || obs.gateway_util[g] > 1.0)
    });
    let mut reroutes = Vec::new();
    if stuck {
        let mut order: Vec<usize> = (0..zones).collect();
        order.sort_by(|&a, &b| obs.zone_offered_bps[b].total_cmp(&obs.zone_offered_bps[a]).then(a.cmp(&b)));
        let mut load = vec![0.0; model.gateways];
        for z in order {
            let offered = obs.zone_offered_bps[z];
            let g = model
                .topo
                .gateways_by_distance(z)
                .into_iter()
                .find(|&h| model.transport_capacity(z, h, mw_rain_db) >= offered && load[h] + offered <= REROUTE_FILL * cap(h))
                .unwrap_or(cfg.serving_gateway[z]);
            load[g] += offered;
            if g != cfg.serving_gateway[z] {
                reroutes.push((z, g));
            }
        }
        reroutes.sort_unstable();
    }
    if !reroutes.is_empty() {
        out[ActionKind::RerouteZoneToGateway.index()] = mk(ActionKind::RerouteZoneToGateway, ActionParams::Reroute(reroutes));
    }

    // UAV activation for the most congested violating zone a charged idle UAV can reach
    if cfg.uav_slots.len() < state.uavs.len() {
        let hot = pick(
            zones,
            |z| {
                let u = obs.zone_ground_util[z];
                let ready = state
                    .uavs
                    .iter()
                    .any(|v| matches!(v.task, UavTask::Idle { .. }) && v.battery_wh >= model.dispatch_need_wh(v.pos, z));
                (u >= HOT && obs.zone_violations[z] != 0 && ready).then_some(u)
            },
            true,
        );
        if let Some(z) = hot {
            out[ActionKind::ActivateUav.index()] = mk(ActionKind::ActivateUav, ActionParams::Zone(z));
        }
    }
    let cold = pick(
        zones,
        |z| {
            let u = obs.zone_ground_util[z];
            (u < COLD && cfg.uav_slots.contains(&z)).then_some(u)
        },
        false,
    );
    if let Some(z) = cold {
        out[ActionKind::DeactivateUav.index()] = mk(ActionKind::DeactivateUav, ActionParams::Zone(z));
    }

    let wake = pick(
        zones,
        |z| {
            let asleep = model.zone_smalls[z].iter().any(|&i| cfg.small_cell_sleep[i] != SleepMode::Active)
                || model.zone_macros[z].iter().any(|&i| cfg.macro_power_mode[i] != SleepMode::Active);
            let u = obs.zone_ground_util[z];
            (asleep && u >= HOT && obs.zone_violations[z] != 0).then_some(u)
        },
        true,
    );
    if let Some(z) = wake {
        out[ActionKind::WakeSmallCells.index()] = mk(ActionKind::WakeSmallCells, ActionParams::Zone(z));
    }

    let target = model.spec.edge.target_utilization;
    let sleep = pick(
        zones,
        |z| {
            let n = sleepable_small_cells(model, cfg, z, obs.zone_ground_bps[z], target);
            (n > 0).then_some(n as f64)
        },
        true,
    );
    if let Some(z) = sleep {
        out[ActionKind::SleepSmallCells.index()] = mk(ActionKind::SleepSmallCells, ActionParams::Zone(z));
    }

    // analytics to the hub of the currently cleanest region
    if let Some(r) = (0..intensity.len()).min_by(|&a, &b| intensity[a].total_cmp(&intensity[b])) {
        let hub = model.region_hub[r];
        if cfg.edge_placement[MIOT] != Placement::Gateway(hub) {
            out[ActionKind::ShiftEdgeService.index()] = mk(
                ActionKind::ShiftEdgeService,
                ActionParams::Edge {
                    service: MIOT,
                    gateway: hub,
                },
            );
        }
    }

    // under rain, steer loaded beams to the highest-elevation satellite
    if obs.rain {
        let tick = state.tick.min(model.sky.ticks().saturating_sub(1));
        let mut pairs = Vec::new();
        for z in 0..zones {
            let (best, _) = model.sky.zone_best(tick, z);
            if obs.zone_sat_bps[z] > 0.0 && best != crate::topology::NO_SATELLITE && state.sat[z] != best {
                pairs.push((z, best));
            }
        }
        if !pairs.is_empty() {
            out[ActionKind::SteerBeamToSatellite.index()] = mk(ActionKind::SteerBeamToSatellite, ActionParams::Beam(pairs));
        }
    }
    out
}

/// Small cells of a zone to put to sleep: the count that saves the most power at `load_bps`
/// while keeping `load_bps / target` of active capacity, or 0 when no count saves power.
fn sleepable_small_cells(model: &Model, cfg: &HourConfig, z: usize, load_bps: f64, target: f64) -> usize {
    let active = model.zone_smalls[z]
        .iter()
        .filter(|&&i| cfg.small_cell_sleep[i] == SleepMode::Active)
        .count();
    let cs = model.small_cap[z];
    if active == 0 || cs <= 0.0 {
        return 0;
    }
    let cap = active_capacity(model, cfg, z);
    let spare = cap - load_bps / target;
    if spare <= 0.0 {
        return 0;
    }
    let limit = ((spare / cs).floor() as usize).min(active);
    let pc = &model.spec.power_catalog;
    let macros = model.zone_macros[z]
        .iter()
        .filter(|&&i| cfg.macro_power_mode[i] == SleepMode::Active)
        .count() as f64;
    let macro_dyn = macros * pc.macro_cell.load_slope_w_per_bps.unwrap_or(0.0) * model.macro_cap[z];
    let small_dyn = pc.small_cell.load_slope_w_per_bps.unwrap_or(0.0) * cs;
    // dynamic power at a uniform site utilization of load / capacity
    let power = |k: usize| {
        let on = (active - k) as f64;
        let c = cap - k as f64 * cs;
        let dynamic = if c > 0.0 {
            (macro_dyn + on * small_dyn) * load_bps / c
        } else {
            0.0
        };
        dynamic + on * pc.small_cell.active_w + k as f64 * pc.small_cell.deep_sleep_w
    };
    let base = power(0);
    let mut best = (0, 0.0);
    for k in 1..=limit {
        let saving = base - power(k);
        if saving > best.1 {
            best = (k, saving);
        }
    }
    best.0
}

/// Applies an action to the configuration in force for the rest of the hour.
pub fn apply_action(model: &Model, cfg: &mut HourConfig, state: &SimState, action: &Action) {
    match (&action.kind, &action.params) {
        (ActionKind::RerouteZoneToGateway, ActionParams::Reroute(pairs)) => {
            for &(z, g) in pairs {
                cfg.serving_gateway[z] = g;
            }
        }
        (ActionKind::ActivateUav, ActionParams::Zone(z)) => {
            cfg.uav_slots.push(*z);
            cfg.uav_slots.sort_unstable();
        }
        (ActionKind::DeactivateUav, ActionParams::Zone(z)) => {
            if let Some(i) = cfg.uav_slots.iter().position(|x| x == z) {
                cfg.uav_slots.remove(i);
            }
        }
        (ActionKind::WakeSmallCells, ActionParams::Zone(z)) => {
            for &i in &model.zone_smalls[*z] {
                cfg.small_cell_sleep[i] = SleepMode::Active;
            }
            for &i in &model.zone_macros[*z] {
                cfg.macro_power_mode[i] = SleepMode::Active;
            }
        }
        (ActionKind::SleepSmallCells, ActionParams::Zone(z)) => {
            let target = model.spec.edge.target_utilization;
            let mut k = sleepable_small_cells(model, cfg, *z, state.obs.zone_ground_bps[*z], target);
            for &i in &model.zone_smalls[*z] {
                if k == 0 {
                    break;
                }
                if cfg.small_cell_sleep[i] == SleepMode::Active {
                    cfg.small_cell_sleep[i] = SleepMode::DeepSleep;
                    k -= 1;
                }
            }
        }
        (ActionKind::ShiftEdgeService, ActionParams::Edge { service, gateway }) => {
            cfg.edge_placement[*service] = Placement::Gateway(*gateway);
        }
        (ActionKind::SteerBeamToSatellite, ActionParams::Beam(pairs)) => {
            for &(z, s) in pairs {
                cfg.satellite_handover[z] = Handover::Preferred(s);
            }
        }
        _ => {}
    }
}

/// Reward of one tick: negative carbon per GB minus the SLA penalty.
pub fn reward(out: &TickOut, sla_penalty: f64) -> f64 {
    let gb = out.bits_delivered() / BITS_PER_GB;
    let per_gb = if gb > 0.0 { out.emissions_g / gb } else { 0.0 };
    -per_gb - sla_penalty * f64::from(out.sla_violations)
}

/// Linear actor-critic agent; serializes to the policy file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlAgent {
    pub features: Vec<String>,
    pub actions: Vec<String>,
    /// One weight row per action, in [`ActionKind::ALL`] order.
    pub actor: Vec<Vec<f64>>,
    pub critic: Vec<f64>,
    pub gamma: f64,
    pub actor_step: f64,
    pub critic_step: f64,
    pub sla_penalty: f64,
    pub exploration: f64,
    /// Normalizer of carbon-intensity features.
    pub carbon_scale: f64,
    pub config: RlConfig,
    pub trained_episodes: u32,
}

impl RlAgent {
    pub fn new(feature_names: Vec<String>, config: &RlConfig, carbon_scale: f64) -> Self {
        let d = feature_names.len();
        RlAgent {
            actions: ActionKind::ALL.iter().map(|a| a.name().to_string()).collect(),
            actor: vec![vec![0.0; d]; ActionKind::ALL.len()],
            critic: vec![0.0; d],
            features: feature_names,
            gamma: config.gamma,
            actor_step: config.actor_step,
            critic_step: config.critic_step,
            sla_penalty: config.sla_penalty,
            exploration: config.exploration_start,
            carbon_scale,
            config: config.clone(),
            trained_episodes: 0,
        }
    }

    /// Agent with actor weights drawn uniformly from [-1, 1].
    pub fn random(feature_names: Vec<String>, config: &RlConfig, carbon_scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut a = Self::new(feature_names, config, carbon_scale);
        for row in &mut a.actor {
            for w in row.iter_mut() {
                *w = rng.random_range(-1.0..=1.0);
            }
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.critic.len()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.critic.iter().zip(x).map(|(w, f)| w * f).sum()
    }

    pub fn scores(&self, x: &[f64]) -> [f64; 8] {
        let mut s = [0.0; 8];
        for (i, row) in self.actor.iter().enumerate() {
            s[i] = row.iter().zip(x).map(|(w, f)| w * f).sum();
        }
        s
    }

    /// Softmax policy over valid actions; invalid actions get probability 0.
    pub fn probabilities(&self, x: &[f64], mask: &[bool; 8]) -> Result<[f64; 8]> {
        self.check(x)?;
        let s = self.scores(x);
        let m = (0..8).filter(|&i| mask[i]).map(|i| s[i]).fold(f64::NEG_INFINITY, f64::max);
        let mut p = [0.0; 8];
        let mut z = 0.0;
        for i in 0..8 {
            if mask[i] {
                p[i] = (s[i] - m).exp();
                z += p[i];
            }
        }
        if z > 0.0 {
            for v in &mut p {
                *v /= z;
            }
        }
        Ok(p)
    }

    /// Samples an action: uniform over valid actions with probability
    /// `exploration`, otherwise from the softmax.
    pub fn act(&self, x: &[f64], mask: &[bool; 8], rng: &mut ChaCha8Rng) -> Result<ActionKind> {
        let p = self.probabilities(x, mask)?;
        let valid: Vec<usize> = (0..8).filter(|&i| mask[i]).collect();
        if valid.is_empty() {
            return Ok(ActionKind::NoOp);
        }
        let u: f64 = rng.random();
        if u < self.exploration {
            return Ok(ActionKind::ALL[valid[rng.random_range(0..valid.len())]]);
        }
        let mut r: f64 = rng.random();
        for &i in &valid {
            r -= p[i];
            if r < 0.0 {
                return Ok(ActionKind::ALL[i]);
            }
        }
        Ok(ActionKind::ALL[*valid.last().expect("non-empty")])
    }

    /// Deterministic inference: highest-scoring valid action, ties toward the
    /// lowest index (no_op first).
    pub fn greedy(&self, x: &[f64], mask: &[bool; 8]) -> Result<ActionKind> {
        self.check(x)?;
        let s = self.scores(x);
        let mut best = ActionKind::NoOp;
        let mut best_s = if mask[0] { s[0] } else { f64::NEG_INFINITY };
        for i in 1..8 {
            if mask[i] && s[i] > best_s {
                best_s = s[i];
                best = ActionKind::ALL[i];
            }
        }
        Ok(best)
    }

    /// TD(0) update of the critic alone; returns the TD error.
    pub fn update_critic(&mut self, x: &[f64], reward: f64, x_next: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.check(x_next)?;
        if !reward.is_finite() {
            return Err(Error::InvalidParameter("reward must be finite".into()));
        }
        let delta = reward + self.gamma * self.value(x_next) - self.value(x);
        for (w, f) in self.critic.iter_mut().zip(x) {
            *w += self.critic_step * delta * f;
        }
        Ok(delta)
    }

    /// One-step actor-critic update; returns the TD error.
    pub fn update(&mut self, x: &[f64], action: ActionKind, reward: f64, x_next: &[f64], mask: &[bool; 8]) -> Result<f64> {
        self.check(x)?;
        self.check(x_next)?;
        if !reward.is_finite() {
            return Err(Error::InvalidParameter("reward must be finite".into()));
        }
        let delta = reward + self.gamma * self.value(x_next) - self.value(x);
        if delta == 0.0 {
            return Ok(0.0);
        }
        let p = self.probabilities(x, mask)?;
        for (w, f) in self.critic.iter_mut().zip(x) {
            *w += self.critic_step * delta * f;
        }
        for (b, row) in self.actor.iter_mut().enumerate() {
            if !mask[b] {
                continue;
            }
            let g = if b == action.index() { 1.0 - p[b] } else { -p[b] };
            for (w, f) in row.iter_mut().zip(x) {
                *w += self.actor_step * delta * g * f;
            }
        }
        Ok(delta)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("agent serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: RlAgent = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<policy>".into(),
            message: e.to_string(),
        })?;
        if a.actor.len() != ActionKind::ALL.len() || a.actor.iter().any(|r| r.len() != a.critic.len()) || a.features.len() != a.critic.len()
        {
            return Err(Error::DimensionMismatch {
                expected: a.features.len(),
                got: a.critic.len(),
            });
        }
        Ok(a)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingPolicyFile(path.display().to_string()))?;
        Self::from_json(&text)
    }
}

/// Mask derived from a proposal set.
pub fn mask_of(proposals: &[Option<Action>; 8]) -> [bool; 8] {
    let mut m = [false; 8];
    for (i, p) in proposals.iter().enumerate() {
        m[i] = p.is_some();
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RlConfig;
    use rand::SeedableRng;

    fn cfg() -> RlConfig {
        crate::config::default_paper_scenario().orchestration.rl
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn dominant_weight_wins_without_exploration() {
        let mut a = RlAgent::new(names(3), &cfg(), 1.0);
        a.exploration = 0.0;
        a.actor[ActionKind::SleepSmallCells.index()][2] = 50.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(a.act(&[0.0, 0.0, 1.0], &[true; 8], &mut rng).unwrap(), ActionKind::SleepSmallCells);
        }
    }

    #[test]
    fn zero_weights_sample_uniformly_over_valid_actions() {
        let mut a = RlAgent::new(names(2), &cfg(), 1.0);
        a.exploration = 0.0;
        let mut mask = [true; 8];
        mask[ActionKind::ActivateUav.index()] = false;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 8];
        let n = 70_000;
        for _ in 0..n {
            counts[a.act(&[1.0, 0.5], &mask, &mut rng).unwrap().index()] += 1;
        }
        assert_eq!(counts[ActionKind::ActivateUav.index()], 0);
        // 7 valid actions, expected 10_000 each; 5 sigma is about 430
        for (i, &c) in counts.iter().enumerate() {
            if mask[i] {
                assert!((c as f64 - 10_000.0).abs() < 450.0, "action {i}: {c}");
            }
        }
    }

    #[test]
    fn zero_td_error_leaves_weights() {
        let mut a = RlAgent::new(names(2), &cfg(), 1.0);
        let before = a.clone();
        let d = a.update(&[1.0, 0.0], ActionKind::NoOp, 0.0, &[1.0, 0.0], &[true; 8]).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(a, before);
    }

    #[test]
    fn positive_td_raises_chosen_probability() {
        let mut a = RlAgent::new(names(2), &cfg(), 1.0);
        a.gamma = 0.0;
        a.critic_step = 0.0;
        let x = [1.0, 0.3];
        let k = ActionKind::WakeSmallCells;
        let mut last = a.probabilities(&x, &[true; 8]).unwrap()[k.index()];
        for _ in 0..20 {
            a.update(&x, k, 1.0, &x, &[true; 8]).unwrap();
            let p = a.probabilities(&x, &[true; 8]).unwrap()[k.index()];
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn dimension_is_checked() {
        let a = RlAgent::new(names(3), &cfg(), 1.0);
        assert!(matches!(
            a.greedy(&[1.0], &[true; 8]),
            Err(Error::DimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn greedy_prefers_no_op_on_ties() {
        let a = RlAgent::new(names(2), &cfg(), 1.0);
        assert_eq!(a.greedy(&[1.0, 1.0], &[true; 8]).unwrap(), ActionKind::NoOp);
    }

    #[test]
    fn policy_file_round_trips_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = RlAgent::random(names(17), &cfg(), 512.25, &mut rng);
        let b = RlAgent::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
    }
}
