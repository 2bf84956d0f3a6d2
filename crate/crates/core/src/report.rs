//! Output files: per-tick KPIs, run summary, figure series and policy comparisons.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::BITS_PER_GB;
use crate::engine::{Exogenous, Model, World};
use crate::error::{Error, Result};
use crate::orchestration::PolicyKind;
use crate::sim::{summarize, KpiRecord, RunResult, Summary};

pub const KPI_HEADER: &str = "tick_minute,class,offered_bits,served_bits,latency_ms_p95,energy_kwh_ran,energy_kwh_sat,energy_kwh_uav,energy_kwh_edge,emissions_g,renewable_kwh,sla_violations";
const CLASS_NAMES: [&str; 3] = ["embb", "urllc", "miot"];

/// Four rows per tick: one per class (traffic and latency only) and an `all`
/// row carrying the tick's energy, emissions and violation totals.
pub fn kpis_csv(kpis: &[KpiRecord]) -> String {
    let mut s = String::with_capacity(kpis.len() * 4 * 120);
    s.push_str(KPI_HEADER);
    s.push('\n');
    for k in kpis {
        for c in 0..3 {
            let _ = writeln!(
                s,
                "{},{},{},{},{},0,0,0,0,0,0,{}",
                k.tick_minute, CLASS_NAMES[c], k.offered_bits[c], k.served_bits[c], k.p95_ms[c], k.class_violations[c]
            );
        }
        let e = &k.energy_kwh;
        let _ = writeln!(
            s,
            "{},all,{},{},{},{},{},{},{},{},{},{}",
            k.tick_minute,
            k.offered_bits.iter().sum::<f64>(),
            k.served_bits.iter().sum::<f64>(),
            k.p95_all_ms,
            e[0],
            e[1],
            e[2],
            e[3],
            k.emissions_g,
            k.renewable_kwh,
            k.sla_violations
        );
    }
    s
}

/// Parses `kpis.csv` back into records (actions are not stored).
pub fn parse_kpis_csv(text: &str) -> Result<Vec<KpiRecord>> {
    let mut lines = text.lines();
    let bad = |line: usize, m: &str| Error::Range {
        line,
        message: m.to_string(),
    };
    if lines.next() != Some(KPI_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let mut out: Vec<KpiRecord> = Vec::new();
    let mut cur: Option<KpiRecord> = None;
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(bad(n, "expected 12 fields"));
        }
        let num = |j: usize| f[j].parse::<f64>().map_err(|_| bad(n, "bad number"));
        let int = |j: usize| f[j].parse::<u64>().map_err(|_| bad(n, "bad integer"));
        let minute = int(0)?;
        let rec = cur.get_or_insert(KpiRecord {
            tick_minute: minute,
            offered_bits: [0.0; 3],
            served_bits: [0.0; 3],
            p95_ms: [0.0; 3],
            p95_all_ms: 0.0,
            energy_kwh: [0.0; 4],
            emissions_g: 0.0,
            renewable_kwh: 0.0,
            class_violations: [0; 3],
            sla_violations: 0,
            action: None,
        });
        if rec.tick_minute != minute {
            return Err(bad(n, "tick rows out of order"));
        }
        match f[1] {
            "all" => {
                rec.p95_all_ms = num(4)?;
                rec.energy_kwh = [num(5)?, num(6)?, num(7)?, num(8)?];
                rec.emissions_g = num(9)?;
                rec.renewable_kwh = num(10)?;
                rec.sla_violations = int(11)? as u32;
                out.push(cur.take().expect("record in progress"));
            }
            name => {
                let c = CLASS_NAMES.iter().position(|x| *x == name).ok_or_else(|| bad(n, "unknown class"))?;
                rec.offered_bits[c] = num(2)?;
                rec.served_bits[c] = num(3)?;
                rec.p95_ms[c] = num(4)?;
                rec.class_violations[c] = int(11)? as u32;
            }
        }
    }
    if cur.is_some() {
        return Err(bad(0, "incomplete final tick"));
    }
    Ok(out)
}

/// Hourly carbon intensity per region next to the run's hourly gCO2e/GB.
pub fn fig_carbon_trace_csv(model: &Model, world: &World, kpis: &[KpiRecord]) -> String {
    let mut s = String::from("hour,region,intensity_gco2_per_kwh,renewable_fraction,run_gco2_per_gb\n");
    let tph = model.ticks_per_hour as usize;
    for (h, chunk) in kpis.chunks(tph).enumerate() {
        let em: f64 = chunk.iter().map(|k| k.emissions_g).sum();
        let gb: f64 = chunk.iter().map(|k| k.served_bits.iter().sum::<f64>()).sum::<f64>() / BITS_PER_GB;
        let per_gb = if gb > 0.0 { em / gb } else { 0.0 };
        for (r, name) in model.spec.regions.iter().enumerate() {
            let (i, ren) = world.carbon(h as u64 * model.ticks_per_hour, r);
            let _ = writeln!(s, "{h},{name},{i},{ren},{per_gb}");
        }
    }
    s
}

/// Hourly energy by layer.
pub fn fig_energy_breakdown_csv(model: &Model, kpis: &[KpiRecord]) -> String {
    let mut s = String::from("hour,energy_kwh_ran,energy_kwh_sat,energy_kwh_uav,energy_kwh_edge,energy_kwh_total,emissions_g\n");
    for (h, chunk) in kpis.chunks(model.ticks_per_hour as usize).enumerate() {
        let mut e = [0.0; 4];
        let mut em = 0.0;
        for k in chunk {
            for l in 0..4 {
                e[l] += k.energy_kwh[l];
            }
            em += k.emissions_g;
        }
        let _ = writeln!(s, "{h},{},{},{},{},{},{em}", e[0], e[1], e[2], e[3], e[0] + e[1] + e[2] + e[3]);
    }
    s
}

/// Per-tick latency from one hour before each event until one hour after it.
pub fn fig_latency_event_csv(model: &Model, kpis: &[KpiRecord], summary: &Summary) -> String {
    let mut s = String::from("event,tick_minute,minutes_from_onset,p95_ms_all,p95_ms_urllc,sla_violations\n");
    let tph = model.ticks_per_hour as f64;
    let minutes = f64::from(model.spec.epoch_minutes);
    for (i, e) in summary.events.iter().enumerate() {
        let onset = (e.start_hour * tph).round() as usize;
        let from = onset.saturating_sub(tph as usize);
        let to = (((e.end_hour * tph).round() as usize) + tph as usize).min(kpis.len());
        for k in &kpis[from..to] {
            let rel = k.tick_minute as f64 - onset as f64 * minutes;
            let _ = writeln!(
                s,
                "{i},{},{rel},{},{},{}",
                k.tick_minute, k.p95_all_ms, k.p95_ms[1], k.sla_violations
            );
        }
    }
    s
}

pub fn summary_json(summary: &Summary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, body).map_err(|e| Error::io(p, e))
}

/// Writes every per-run output file into `dir`.
pub fn emit_run(model: &Model, world: &World, result: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, "kpis.csv", &kpis_csv(&result.kpis))?;
    write(dir, "summary.json", &summary_json(&result.summary))?;
    write(dir, "fig_carbon_trace.csv", &fig_carbon_trace_csv(model, world, &result.kpis))?;
    write(dir, "fig_energy_breakdown.csv", &fig_energy_breakdown_csv(model, &result.kpis))?;
    write(
        dir,
        "fig_latency_event.csv",
        &fig_latency_event_csv(model, &result.kpis, &result.summary),
    )?;
    Ok(())
}

/// Rebuilds a run summary from an emitted `kpis.csv`.
pub fn summary_from_csv(model: &Model, policy: PolicyKind, seed: u64, text: &str) -> Result<Summary> {
    summarize(policy, seed, &parse_kpis_csv(text)?, model, &model.spec.rain_events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        Some(Stat {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAggregate {
    pub start_hour: f64,
    pub p95_ms: Option<Stat>,
    /// Over seeds that recovered.
    pub recovery_s: Option<Stat>,
    pub unrecovered_seeds: usize,
    pub sla_violations: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAggregate {
    pub policy: String,
    pub seeds: Vec<u64>,
    pub gco2_per_gb: Option<Stat>,
    pub energy_kwh_ran: Option<Stat>,
    pub energy_kwh_sat: Option<Stat>,
    pub energy_kwh_uav: Option<Stat>,
    pub energy_kwh_edge: Option<Stat>,
    pub energy_kwh_total: Option<Stat>,
    pub emissions_g: Option<Stat>,
    pub renewable_utilization: Option<Stat>,
    pub p95_ms: Option<Stat>,
    pub sla_violations: Option<Stat>,
    pub events: Vec<EventAggregate>,
}

/// Relative change of a policy against the reference, from seed means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub policy: String,
    /// (reference - policy) / reference.
    pub gco2_per_gb_reduction: Option<f64>,
    pub energy_reduction: Option<f64>,
    /// Percentage points.
    pub renewable_utilization_gain_pp: Option<f64>,
    pub p95_reduction: Option<f64>,
    /// Policy violations divided by reference violations.
    pub sla_violation_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub reference: String,
    pub policies: Vec<PolicyAggregate>,
    pub deltas: Vec<Delta>,
}

fn mean_of(s: &Option<Stat>) -> Option<f64> {
    s.as_ref().map(|x| x.mean)
}

pub fn aggregate(policy: PolicyKind, summaries: &[&Summary]) -> PolicyAggregate {
    let col = |f: &dyn Fn(&Summary) -> Option<f64>| Stat::of(&summaries.iter().filter_map(|s| f(s)).collect::<Vec<_>>());
    let n_events = summaries.first().map_or(0, |s| s.events.len());
    let events = (0..n_events)
        .map(|i| {
            let rec: Vec<f64> = summaries
                .iter()
                .filter_map(|s| s.events.get(i).and_then(|e| e.recovery_s))
                .collect();
            EventAggregate {
                start_hour: summaries[0].events[i].start_hour,
                p95_ms: col(&|s| s.events.get(i).map(|e| e.p95_ms)),
                unrecovered_seeds: summaries.len() - rec.len(),
                recovery_s: Stat::of(&rec),
                sla_violations: col(&|s| s.events.get(i).map(|e| e.sla_violations as f64)),
            }
        })
        .collect();
    PolicyAggregate {
        policy: policy.name().to_string(),
        seeds: summaries.iter().map(|s| s.seed).collect(),
        gco2_per_gb: col(&|s| s.gco2_per_gb),
        energy_kwh_ran: col(&|s| Some(s.energy_kwh.ran)),
        energy_kwh_sat: col(&|s| Some(s.energy_kwh.satellite)),
        energy_kwh_uav: col(&|s| Some(s.energy_kwh.uav)),
        energy_kwh_edge: col(&|s| Some(s.energy_kwh.edge)),
        energy_kwh_total: col(&|s| Some(s.energy_kwh.total)),
        emissions_g: col(&|s| Some(s.emissions_g)),
        renewable_utilization: col(&|s| s.renewable_utilization),
        p95_ms: col(&|s| Some(s.p95_ms.all)),
        sla_violations: col(&|s| Some(s.sla_violations as f64)),
        events,
    }
}

/// Builds the comparison report; `reference` must be among the policies.
pub fn compare(results: &[(PolicyKind, Vec<&Summary>)], reference: PolicyKind) -> Result<ComparisonReport> {
    let policies: Vec<PolicyAggregate> = results.iter().map(|(k, s)| aggregate(*k, s)).collect();
    let r = policies
        .iter()
        .find(|p| p.policy == reference.name())
        .ok_or_else(|| Error::InvalidParameter(format!("reference policy '{reference}' was not run")))?
        .clone();
    let rel = |refv: Option<f64>, v: Option<f64>| match (refv, v) {
        (Some(a), Some(b)) if a != 0.0 => Some((a - b) / a),
        _ => None,
    };
    let deltas = policies
        .iter()
        .map(|p| Delta {
            policy: p.policy.clone(),
            gco2_per_gb_reduction: rel(mean_of(&r.gco2_per_gb), mean_of(&p.gco2_per_gb)),
            energy_reduction: rel(mean_of(&r.energy_kwh_total), mean_of(&p.energy_kwh_total)),
            renewable_utilization_gain_pp: match (mean_of(&r.renewable_utilization), mean_of(&p.renewable_utilization)) {
                (Some(a), Some(b)) => Some((b - a) * 100.0),
                _ => None,
            },
            p95_reduction: rel(mean_of(&r.p95_ms), mean_of(&p.p95_ms)),
            sla_violation_ratio: match (mean_of(&r.sla_violations), mean_of(&p.sla_violations)) {
                (Some(a), Some(b)) if a > 0.0 => Some(b / a),
                _ => None,
            },
        })
        .collect();
    Ok(ComparisonReport {
        reference: reference.name().to_string(),
        policies,
        deltas,
    })
}

/// Flat table of the headline numbers, one row per policy.
pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut s = String::from("policy,gco2_per_gb_mean,gco2_per_gb_min,gco2_per_gb_max,energy_kwh_total_mean,renewable_utilization_mean,p95_ms_mean,sla_violations_mean,gco2_per_gb_reduction_vs_reference\n");
    for (p, d) in report.policies.iter().zip(&report.deltas) {
        let g = p.gco2_per_gb.clone().unwrap_or(Stat {
            mean: 0.0,
            min: 0.0,
            max: 0.0,
        });
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            p.policy,
            g.mean,
            g.min,
            g.max,
            opt(mean_of(&p.energy_kwh_total)),
            opt(mean_of(&p.renewable_utilization)),
            opt(mean_of(&p.p95_ms)),
            opt(mean_of(&p.sla_violations)),
            opt(d.gco2_per_gb_reduction)
        );
    }
    s
}

pub fn emit_comparison(report: &ComparisonReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    write(dir, "comparison.json", &json)?;
    write(dir, "comparison.csv", &comparison_csv(report))
}
