//! Day-ahead planner: beam search over the knob lattice with the twin as objective.
//!
//! Partial plans are ranked by a penalty (0 when every hour met QoS, 1 per
//! hour that fell back to the QoS-max candidate, 2 per hour that kept any
//! other infeasible candidate), then by predicted emissions plus the carbon
//! cost of pending UAV recharge and deferred work, then by candidate indices.

use std::cmp::Ordering;

use crate::engine::{Compiled, Model, SimState, TickOut};
use crate::error::{Error, Result};
use crate::orchestration::lattice::{Candidate, Lattice};
use crate::orchestration::{DayPlan, HourConfig};
use crate::twin::{Forecast, TwinRun};

/// Energy (kWh) still owed by a state: UAV batteries to refill and deferred work.
pub fn pending_kwh(model: &Model, state: &SimState) -> f64 {
    let mut wh = vec![0.0; model.regions];
    state.pending_recharge_wh(model, &mut wh);
    let uav: f64 = wh.iter().sum::<f64>() / 1000.0;
    uav + state.backlog_server_minutes() / 60.0 * model.spec.power_catalog.edge_server.active_w / 1000.0
}

/// Planning objective: predicted emissions plus pending energy priced at `price` g/kWh.
pub fn plan_score(model: &Model, run: &TwinRun, price: f64) -> f64 {
    run.acc.emissions_g + pending_kwh(model, &run.state) * price
}

#[derive(Clone)]
struct Node {
    run: TwinRun,
    path: Vec<u16>,
    penalty: u32,
    score: f64,
}

fn rank(a: &Node, b: &Node) -> Ordering {
    a.penalty
        .cmp(&b.penalty)
        .then(a.score.total_cmp(&b.score))
        .then_with(|| a.path.cmp(&b.path))
}

/// The planner with its candidate set compiled once.
pub struct Mpc<'a> {
    model: &'a Model,
    candidates: Vec<Candidate>,
    configs: Vec<HourConfig>,
    compiled: Vec<Compiled>,
    fallback: usize,
}

impl<'a> Mpc<'a> {
    pub fn new(model: &'a Model, lattice: &Lattice) -> Self {
        let mut candidates = Vec::new();
        let mut configs = Vec::new();
        let mut compiled: Vec<Compiled> = Vec::new();
        let qos_max = lattice.qos_max();
        let mut fallback = 0;
        for c in lattice.candidates(true) {
            let cfg = lattice.config(c);
            let comp = Compiled::new(model, &cfg);
            match compiled.iter().position(|x| *x == comp) {
                Some(i) => {
                    if c == qos_max {
                        fallback = i;
                    }
                }
                None => {
                    if c == qos_max {
                        fallback = compiled.len();
                    }
                    candidates.push(c);
                    configs.push(cfg);
                    compiled.push(comp);
                }
            }
        }
        Mpc {
            model,
            candidates,
            configs,
            compiled,
            fallback,
        }
    }

    /// Distinct candidates after merging ones that expand to the same configuration.
    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn config(&self, index: usize) -> &HourConfig {
        &self.configs[index]
    }

    pub fn fallback(&self) -> usize {
        self.fallback
    }

    /// Plans `hours` hours from `state` (default: the forecast horizon).
    pub fn plan(&self, state: &SimState, forecast: &Forecast, beam_width: usize, hours: Option<u32>) -> Result<DayPlan> {
        let model = self.model;
        let hours = hours.unwrap_or(forecast.horizon_hours);
        if hours == 0 || beam_width == 0 {
            return Err(Error::InvalidParameter("planning needs a positive horizon and beam width".into()));
        }
        let end = state.tick + u64::from(hours) * model.ticks_per_hour;
        if state.tick < forecast.start_tick() || end > forecast.end_tick() {
            return Err(Error::HorizonMismatch {
                plan: hours as usize,
                forecast: forecast.horizon_hours as usize,
            });
        }
        let price = forecast.mean_min_intensity();
        let mut out = TickOut::new(model);
        let mut beam = vec![Node {
            run: TwinRun::new(state.clone()),
            path: Vec::new(),
            penalty: 0,
            score: 0.0,
        }];
        for _ in 0..hours {
            let mut children = Vec::with_capacity(beam.len() * self.compiled.len());
            for node in &beam {
                for (i, comp) in self.compiled.iter().enumerate() {
                    let mut run = node.run.clone();
                    let rep = run.advance_hour(model, forecast, comp, &mut out);
                    let penalty = node.penalty
                        + match (rep.feasible, i == self.fallback) {
                            (true, _) => 0,
                            (false, true) => 1,
                            (false, false) => 2,
                        };
                    let mut path = node.path.clone();
                    path.push(i as u16);
                    let score = plan_score(model, &run, price);
                    children.push(Node { run, path, penalty, score });
                }
            }
            children.sort_by(rank);
            children.truncate(beam_width);
            beam = children;
        }
        let best = &beam[0];
        Ok(DayPlan {
            configs: best.path.iter().map(|&i| self.configs[i as usize].clone()).collect(),
            predicted: best.run.result(),
        })
    }

    /// Candidate indices of a plan produced by [`Mpc::plan`].
    pub fn indices_of(&self, plan: &DayPlan) -> Vec<usize> {
        plan.configs
            .iter()
            .map(|c| self.configs.iter().position(|x| x == c).unwrap_or(usize::MAX))
            .collect()
    }
}

/// One-shot day-ahead planning with the scenario's lattice.
pub fn plan_day_ahead_mpc(model: &Model, state: &SimState, forecast: &Forecast, beam_width: usize) -> Result<DayPlan> {
    let lattice = Lattice::new(model)?;
    Mpc::new(model, &lattice).plan(state, forecast, beam_width, None)
}
