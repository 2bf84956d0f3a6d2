//! `isatn-sim`: run, train, compare and validate orchestration scenarios.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use isatn_core::orchestration::rl::RlAgent;
use isatn_core::report::{compare, emit_comparison, emit_run};
use isatn_core::sim::{mpc_configs, run_world, train_rl, RunResult};
use isatn_core::{load_scenario, Error, Model, PolicyKind, ScenarioSpec, World};

/// Environment variable capping run parallelism for `compare` (0 = auto).
const THREADS_VAR: &str = "ISATN_SIM_THREADS";

#[derive(Parser, Debug)]
#[command(name = "isatn-sim", version, about = "Carbon-aware ISATN orchestration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one policy on one seed and write its outputs.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_policy)]
        policy: PolicyKind,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Trained controller weights, required for `mpc_rl`.
        #[arg(long)]
        policy_file: Option<PathBuf>,
    },
    /// Train the real-time controller and write a policy file.
    TrainRl {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        episodes: u32,
        #[arg(long)]
        out: PathBuf,
        /// Training seed; defaults to the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run several policies over several seeds and aggregate the results.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., value_parser = parse_policy)]
        policies: Vec<PolicyKind>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Weights for `mpc_rl`; trained on the fly when omitted.
        #[arg(long)]
        policy_file: Option<PathBuf>,
        /// Policy the deltas are measured against.
        #[arg(long, default_value = "qos", value_parser = parse_policy)]
        reference: PolicyKind,
    },
    /// Check a scenario file and print OK.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Write the built-in default scenario as JSON.
    DefaultScenario {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse::<PolicyKind>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn base_dir(scenario: &Path) -> Option<&Path> {
    scenario.parent().filter(|p| !p.as_os_str().is_empty())
}

fn load(scenario: &Path) -> Result<(ScenarioSpec, Model), Error> {
    let spec = load_scenario(scenario)?;
    let model = Model::new(&spec)?;
    Ok((spec, model))
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Validate { scenario } => {
            load(&scenario)?;
            println!("OK");
            Ok(())
        }
        Command::DefaultScenario { out } => {
            let text = isatn_core::default_paper_scenario().to_json() + "\n";
            std::fs::write(&out, text).map_err(|e| io_error(&out, e))
        }
        Command::Run {
            scenario,
            policy,
            seed,
            out,
            policy_file,
        } => {
            let (_, model) = load(&scenario)?;
            let agent = match (policy, policy_file) {
                (_, Some(p)) => Some(RlAgent::load(&p)?),
                (PolicyKind::MpcRl, None) => {
                    return Err(Error::MissingPolicyFile("pass --policy-file for mpc_rl".into()));
                }
                _ => None,
            };
            let world = World::new(&model, seed, base_dir(&scenario))?;
            let result = run_world(&model, &world, policy, agent.as_ref())?;
            emit_run(&model, &world, &result, &out)?;
            print_line(&result);
            Ok(())
        }
        Command::TrainRl {
            scenario,
            episodes,
            out,
            seed,
        } => {
            let (spec, model) = load(&scenario)?;
            let agent = train(&model, seed.unwrap_or(spec.seed), episodes, base_dir(&scenario))?;
            agent.save(&out)?;
            eprintln!("wrote {} ({} episodes)", out.display(), agent.trained_episodes);
            Ok(())
        }
        Command::Compare {
            scenario,
            policies,
            seeds,
            out,
            policy_file,
            reference,
        } => {
            let (spec, model) = load(&scenario)?;
            let dir = base_dir(&scenario);
            std::fs::create_dir_all(&out).map_err(|e| io_error(&out, e))?;
            let agent = if policies.contains(&PolicyKind::MpcRl) {
                Some(match policy_file {
                    Some(p) => RlAgent::load(&p)?,
                    None => {
                        let a = train(&model, spec.seed, spec.orchestration.rl.episodes, dir)?;
                        a.save(&out.join("policy.json"))?;
                        a
                    }
                })
            } else {
                None
            };
            let jobs: Vec<(PolicyKind, u64)> = policies.iter().flat_map(|&p| seeds.iter().map(move |&s| (p, s))).collect();
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(thread_cap())
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            let results: Vec<RunResult> = pool.install(|| {
                jobs.par_iter()
                    .map(|&(policy, seed)| {
                        let world = World::new(&model, seed, dir)?;
                        let r = run_world(&model, &world, policy, agent.as_ref())?;
                        emit_run(&model, &world, &r, &out.join(format!("{}_seed{}", policy.name(), seed)))?;
                        Ok(r)
                    })
                    .collect::<Result<_, Error>>()
            })?;
            for r in &results {
                print_line(r);
            }
            let grouped: Vec<(PolicyKind, Vec<_>)> = policies
                .iter()
                .map(|&p| (p, results.iter().filter(|r| r.policy == p).map(|r| &r.summary).collect()))
                .collect();
            let report = compare(&grouped, reference)?;
            emit_comparison(&report, &out)
        }
    }
}

fn train(model: &Model, seed: u64, episodes: u32, dir: Option<&Path>) -> Result<RlAgent, Error> {
    let world = World::new(model, seed, dir)?;
    let plan = mpc_configs(model, &world)?;
    let (agent, _) = train_rl(model, &plan, seed, episodes, dir)?;
    Ok(agent)
}

fn thread_cap() -> usize {
    std::env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn print_line(r: &RunResult) {
    let g = r.summary.gco2_per_gb.map_or_else(|| "n/a".to_string(), |g| format!("{g:.4}"));
    println!(
        "{} seed={} gco2_per_gb={} energy_kwh={:.3} sla_violations={}",
        r.policy, r.seed, g, r.summary.energy_kwh.total, r.summary.sla_violations
    );
}
