//! Property checks shared by the dedicated tests and the acceptance report.
//! Each returns the first violation found.

use std::fs;

use isatn_core::engine::{Compiled, Exogenous, SimState, TickOut};
use isatn_core::orchestration::lattice::Lattice;
use isatn_core::orchestration::mpc::{plan_score, Mpc};
use isatn_core::orchestration::rl::RlAgent;
use isatn_core::orchestration::ActionKind;
use isatn_core::report::emit_run;
use isatn_core::sim::{drive, run_world, BaselinePolicy, DriveOptions, RunResult};
use isatn_core::twin::{evaluate_plan, Forecast, TwinRun};
use isatn_core::{default_paper_scenario, Model, PolicyKind, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

/// Replays a recorded run and checks every tick's ledgers against sums
/// rebuilt from the raw power draws.
pub fn conservation(model: &Model, world: &World, run: &RunResult) -> Check {
    let policy = run.policy;
    let mut n = 0usize;
    let mut failure = None;
    super::replay(model, world, &run.configs, &run.corrections, |_, out| {
        if failure.is_none() {
            if let Err(e) = tick_balances(model, world, out).and_then(|()| {
                let k = &run.kpis[n];
                ensure!(
                    (k.energy_kwh, k.emissions_g, k.served_bits) == (out.layer_kwh, out.emissions_g, out.served),
                    "replay diverges from the recorded series"
                );
                Ok(())
            }) {
                failure = Some(format!("{policy} tick {}: {e}", out.tick));
            }
        }
        n += 1;
    });
    if let Some(e) = failure {
        return Err(e);
    }
    ensure!(n == run.kpis.len() && n as u64 == model.total_ticks, "{policy}: replayed {n} ticks");
    Ok(())
}

fn tick_balances(model: &Model, world: &World, out: &TickOut) -> Check {
    let mut layer = [0.0; 4];
    let mut region = vec![0.0; model.regions];
    for d in &out.draws {
        ensure!(d.watts >= 0.0, "negative draw");
        let kwh = d.watts * model.tick_h / 1000.0;
        layer[d.layer as usize] += kwh;
        region[d.region] += kwh;
    }
    for i in 0..4 {
        ensure!(
            close(out.layer_kwh[i], layer[i], 1e-9),
            "layer {i}: {} vs {}",
            out.layer_kwh[i],
            layer[i]
        );
    }
    for r in 0..model.regions {
        ensure!(
            close(out.region_kwh[r], region[r], 1e-9),
            "region {r}: {} vs {}",
            out.region_kwh[r],
            region[r]
        );
    }
    let by_layer: f64 = out.layer_kwh.iter().sum();
    let by_region: f64 = out.region_kwh.iter().sum();
    ensure!(close(by_layer, by_region, 1e-9), "layers {by_layer} vs regions {by_region}");
    ensure!(
        out.renewable_kwh <= by_layer * (1.0 + 1e-12),
        "renewable {} above total {by_layer}",
        out.renewable_kwh
    );
    let grams: f64 = (0..model.regions).map(|r| out.region_kwh[r] * world.carbon(out.tick, r).0).sum();
    ensure!(close(out.emissions_g, grams, 1e-9), "emissions {} vs {grams}", out.emissions_g);
    for c in 0..3 {
        ensure!(out.served[c] <= out.offered[c] * (1.0 + 1e-12), "class {c} served above offered");
    }
    for z in 0..model.zones {
        for c in 0..3 {
            ensure!(
                out.zone_served[z][c] <= out.zone_offered[z][c] * (1.0 + 1e-12),
                "zone {z} class {c} served above offered"
            );
        }
    }
    Ok(())
}

/// `(seed, start hour)` windows; the last spans the day-3 rain event.
pub const TWIN_WINDOWS: [(u64, u32); 3] = [(3, 5), (17, 29), (42, 55)];

/// Twin evaluation of a 24-hour window against the engine's own KPI series.
pub fn twin_fidelity(model: &Model, seed: u64, start: u32) -> Check {
    let tph = model.ticks_per_hour as usize;
    let world = World::new(model, seed, None).map_err(|e| e.to_string())?;
    let opts = DriveOptions {
        record: true,
        checkpoints: true,
        hours: Some(start + 24),
    };
    let mut policy = BaselinePolicy::new(model, PolicyKind::QosOnly).map_err(|e| e.to_string())?;
    let trace = drive(model, &world, &mut policy, None, opts).map_err(|e| e.to_string())?;
    let s = start as usize;
    let forecast = Forecast::realized(model, &world, start, 24);
    let twin = evaluate_plan(model, &trace.checkpoints[s], &trace.configs[s..s + 24], &forecast).map_err(|e| e.to_string())?;

    let window = &trace.kpis[s * tph..(s + 24) * tph];
    let mut emissions = 0.0;
    let mut renewable = 0.0;
    let mut layers = [0.0; 4];
    let mut offered = [0.0; 3];
    let mut served = [0.0; 3];
    let mut p95 = [0.0; 3];
    let mut violations = 0u64;
    for k in window {
        emissions += k.emissions_g;
        renewable += k.renewable_kwh;
        for i in 0..4 {
            layers[i] += k.energy_kwh[i];
        }
        for c in 0..3 {
            offered[c] += k.offered_bits[c];
            served[c] += k.served_bits[c];
            p95[c] += k.p95_ms[c];
        }
        violations += u64::from(k.sla_violations);
    }
    let n = window.len() as f64;
    let frac = served.iter().sum::<f64>() / offered.iter().sum::<f64>();

    ensure!(twin.hours == 24, "seed {seed}: twin covered {} hours", twin.hours);
    ensure!(
        twin.emissions_g.to_bits() == emissions.to_bits(),
        "seed {seed}: emissions {} vs {emissions}",
        twin.emissions_g
    );
    ensure!(twin.renewable_kwh.to_bits() == renewable.to_bits(), "seed {seed}: renewable");
    for i in 0..4 {
        ensure!(twin.energy_kwh[i].to_bits() == layers[i].to_bits(), "seed {seed}: layer {i}");
    }
    for c in 0..3 {
        ensure!(twin.p95_ms[c].to_bits() == (p95[c] / n).to_bits(), "seed {seed}: p95 class {c}");
    }
    ensure!(twin.served_fraction.to_bits() == frac.to_bits(), "seed {seed}: served fraction");
    ensure!(
        twin.sla_violations == violations,
        "seed {seed}: violations {} vs {violations}",
        twin.sla_violations
    );
    Ok(())
}

const ORACLE_HOURS: u32 = 3;

struct Best {
    penalty: u32,
    score: f64,
    path: Vec<usize>,
    emissions: f64,
}

fn brute_force(model: &Model, mpc: &Mpc, start: &SimState, forecast: &Forecast) -> Best {
    let k = mpc.candidates().len();
    let compiled: Vec<Compiled> = (0..k).map(|i| Compiled::new(model, mpc.config(i))).collect();
    let price = forecast.mean_min_intensity();
    let mut out = TickOut::new(model);
    let mut best: Option<Best> = None;
    for code in 0..k.pow(ORACLE_HOURS) {
        let path: Vec<usize> = (0..ORACLE_HOURS).map(|h| code / k.pow(ORACLE_HOURS - 1 - h) % k).collect();
        let mut run = TwinRun::new(start.clone());
        let mut penalty = 0;
        for &i in &path {
            let rep = run.advance_hour(model, forecast, &compiled[i], &mut out);
            if !rep.feasible {
                penalty += if i == mpc.fallback() { 1 } else { 2 };
            }
        }
        let score = plan_score(model, &run, price);
        let better = match &best {
            None => true,
            Some(b) => (penalty, score, &path) < (b.penalty, b.score, &b.path),
        };
        if better {
            best = Some(Best {
                penalty,
                score,
                path,
                emissions: run.acc.emissions_g,
            });
        }
    }
    best.expect("at least one path")
}

/// Beam search with a beam as wide as the plan space against exhaustive
/// enumeration on randomized two-zone, two-gateway, three-hour instances.
pub fn mpc_oracle(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for instance in 0..instances {
        let spec = super::tiny_spec(&mut rng);
        let model = Model::new(&spec).map_err(|e| e.to_string())?;
        let lattice = Lattice::new(&model).map_err(|e| e.to_string())?;
        let mpc = Mpc::new(&model, &lattice);
        let k = mpc.candidates().len();
        ensure!(k >= 2, "instance {instance}: only {k} distinct candidates");
        let world = World::new(&model, spec.seed, None).map_err(|e| e.to_string())?;
        let forecast = Forecast::realized(&model, &world, 0, ORACLE_HOURS);
        let start = SimState::initial(&model);

        let oracle = brute_force(&model, &mpc, &start, &forecast);
        let plan = mpc
            .plan(&start, &forecast, k.pow(ORACLE_HOURS), Some(ORACLE_HOURS))
            .map_err(|e| e.to_string())?;
        let got = mpc.indices_of(&plan);
        ensure!(got == oracle.path, "instance {instance}: beam {got:?} vs oracle {:?}", oracle.path);
        ensure!(
            plan.predicted.emissions_g.to_bits() == oracle.emissions.to_bits(),
            "instance {instance}: emissions"
        );
        ensure!(
            plan.predicted.risk_hours.is_empty() == (oracle.penalty == 0),
            "instance {instance}: feasibility"
        );
    }
    Ok(())
}

/// Runs each policy on `world` and on its carbon-tripled copy.
pub fn scale_invariance(model: &Model, world: &World, policies: &[PolicyKind]) -> Check {
    let tripled = world.with_scaled_carbon(3.0);
    for &policy in policies {
        let a = run_world(model, world, policy, None).map_err(|e| e.to_string())?;
        let b = run_world(model, &tripled, policy, None).map_err(|e| e.to_string())?;
        ensure!(a.configs == b.configs, "{policy}: decisions changed");
        let (ea, eb) = (a.summary.emissions_g, b.summary.emissions_g);
        ensure!(ea > 0.0, "{policy}: no emissions");
        ensure!((eb / (3.0 * ea) - 1.0).abs() <= 1e-12, "{policy}: {eb} vs 3 x {ea}");
        ensure!(a.summary.energy_kwh == b.summary.energy_kwh, "{policy}: energy changed");
    }
    Ok(())
}

/// Constant reward in a single state: the critic must settle at
/// `r / (1 - gamma)` within 1%. Returns the learned value.
pub fn critic_fixed_point(reward: f64, steps: usize) -> Result<f64, String> {
    let cfg = default_paper_scenario().orchestration.rl;
    let mut agent = RlAgent::new(vec!["bias".into()], &cfg, 1.0);
    let x = [1.0];
    let mut mask = [false; 8];
    mask[ActionKind::NoOp.index()] = true;
    for _ in 0..steps {
        agent.update(&x, ActionKind::NoOp, reward, &x, &mask).map_err(|e| e.to_string())?;
    }
    let v = agent.value(&x);
    let target = reward / (1.0 - cfg.gamma);
    ensure!((v - target).abs() <= 0.01 * target.abs(), "critic {v} vs {target}");
    Ok(v)
}

/// Two independent runs of the same (scenario, policy file, seed) write
/// byte-identical `kpis.csv` and `summary.json`.
pub fn determinism(model: &Model, seed: u64, policy: PolicyKind, agent: Option<&RlAgent>) -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let reloaded = agent
        .map(|a| RlAgent::from_json(&a.to_json()))
        .transpose()
        .map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for (i, a) in [agent, reloaded.as_ref()].into_iter().enumerate() {
        let world = World::new(model, seed, None).map_err(|e| e.to_string())?;
        let run = run_world(model, &world, policy, a).map_err(|e| e.to_string())?;
        let dir = root.path().join(i.to_string());
        emit_run(model, &world, &run, &dir).map_err(|e| e.to_string())?;
        let read = |name: &str| fs::read(dir.join(name)).map_err(|e| e.to_string());
        files.push((read("kpis.csv")?, read("summary.json")?));
    }
    ensure!(files[0].0 == files[1].0, "{policy} seed {seed}: kpis.csv differs");
    ensure!(files[0].1 == files[1].1, "{policy} seed {seed}: summary.json differs");
    Ok(())
}
