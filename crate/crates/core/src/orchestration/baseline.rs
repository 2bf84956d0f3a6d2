//! Reference policies: static, QoS-only and energy-only.
//!
//! The adaptive baselines pick one lattice candidate per decision with a
//! one-hour twin lookahead. They see forecasts only through [`CarbonBlind`].

use crate::engine::{Compiled, Exogenous, Model, SimState, TickOut};
use crate::error::Result;
use crate::orchestration::lattice::{static_config, EdgeMode, Lattice};
use crate::orchestration::mpc::pending_kwh;
use crate::orchestration::{HourConfig, PolicyKind};
use crate::twin::{CarbonBlind, HourReport, TwinRun};

/// Served fractions closer than this count as equal.
const SERVED_TOLERANCE: f64 = 1e-9;

pub struct Baselines<'a> {
    model: &'a Model,
    configs: Vec<HourConfig>,
    compiled: Vec<Compiled>,
    fallback: usize,
    fixed: HourConfig,
}

impl<'a> Baselines<'a> {
    pub fn new(model: &'a Model, lattice: &Lattice) -> Self {
        let qos_max = lattice.qos_max();
        let mut configs = Vec::new();
        let mut compiled: Vec<Compiled> = Vec::new();
        let mut fallback = 0;
        for c in lattice.candidates(false) {
            debug_assert_ne!(lattice.edge_modes[c.edge], EdgeMode::Defer);
            let cfg = lattice.config(c);
            let comp = Compiled::new(model, &cfg);
            let idx = match compiled.iter().position(|x| *x == comp) {
                Some(i) => i,
                None => {
                    configs.push(cfg);
                    compiled.push(comp);
                    compiled.len() - 1
                }
            };
            if c == qos_max {
                fallback = idx;
            }
        }
        Baselines {
            model,
            configs,
            compiled,
            fallback,
            fixed: static_config(model),
        }
    }

    pub fn candidate_configs(&self) -> &[HourConfig] {
        &self.configs
    }

    fn lookahead<E: Exogenous + ?Sized>(&self, state: &SimState, exo: &E) -> Vec<(HourReport, f64)> {
        let mut out = TickOut::new(self.model);
        let start_pending = pending_kwh(self.model, state);
        self.compiled
            .iter()
            .map(|comp| {
                let mut run = TwinRun::new(state.clone());
                let rep = run.advance_hour(self.model, exo, comp, &mut out);
                let energy = rep.kwh + pending_kwh(self.model, &run.state) - start_pending;
                (rep, energy)
            })
            .collect()
    }

    /// Index of the candidate a baseline picks for the next hour.
    pub fn choose<E: Exogenous + ?Sized>(&self, kind: PolicyKind, state: &SimState, forecast: &E) -> Option<usize> {
        let view = CarbonBlind(forecast);
        match kind {
            PolicyKind::QosOnly => {
                let reps = self.lookahead(state, &view);
                let best_served = reps.iter().map(|r| r.0.served_fraction).fold(f64::NEG_INFINITY, f64::max);
                let mut best: Option<usize> = None;
                for (i, (r, _)) in reps.iter().enumerate() {
                    if r.served_fraction + SERVED_TOLERANCE < best_served {
                        continue;
                    }
                    if best.is_none_or(|b| r.mean_p95 < reps[b].0.mean_p95) {
                        best = Some(i);
                    }
                }
                best
            }
            PolicyKind::EnergyOnly => {
                let reps = self.lookahead(state, &view);
                let mut best: Option<usize> = None;
                for (i, (r, e)) in reps.iter().enumerate() {
                    if r.feasible && best.is_none_or(|b| *e < reps[b].1) {
                        best = Some(i);
                    }
                }
                Some(best.unwrap_or(self.fallback))
            }
            _ => None,
        }
    }

    /// The configuration a baseline applies for the next hour.
    pub fn decide<E: Exogenous + ?Sized>(&self, kind: PolicyKind, state: &SimState, forecast: &E) -> Result<HourConfig> {
        match kind {
            PolicyKind::Static => Ok(self.fixed.clone()),
            PolicyKind::QosOnly | PolicyKind::EnergyOnly => {
                Ok(self.configs[self.choose(kind, state, forecast).unwrap_or(self.fallback)].clone())
            }
            other => Err(crate::error::Error::InvalidParameter(format!("'{other}' is not a baseline policy"))),
        }
    }
}

/// One-shot baseline decision with the scenario's lattice.
pub fn baseline_decide<E: Exogenous + ?Sized>(model: &Model, kind: PolicyKind, state: &SimState, forecast: &E) -> Result<HourConfig> {
    let lattice = Lattice::new(model)?;
    Baselines::new(model, &lattice).decide(kind, state, forecast)
}
