use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use airs_aoi::config::ScenarioConfig;
use airs_aoi::selfcheck;
use airs_aoi::sim::{
    self, aoi_trace_csv, convergence_csv, run_episode, run_sweep, sweep_csv, Policy,
};
use airs_aoi::{Error, Result};

#[derive(Parser)]
#[command(
    name = "airs-aoi",
    version,
    about = "Simulator and per-slot optimizer for an aerial-reflector downlink minimizing weighted-sum age of information"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file; the built-in default scenario is used when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory for CSV artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario override as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Runs one episode and writes the per-slot AoI trace.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// proposed, fixed-location, greedy-no-move or random-schedule.
        #[arg(long, default_value = "proposed")]
        policy: String,
    },
    /// Sweeps one scenario parameter across policies and seeds.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Axis as name:v1,v2,...
        #[arg(long)]
        axis: String,
        /// Episodes per (policy, axis value), with consecutive seeds.
        #[arg(long, default_value_t = 1)]
        seeds_per_point: u64,
        /// Restricts the sweep to one policy; all four by default.
        #[arg(long)]
        policy: Option<String>,
    },
    /// Runs the relaxation policy and writes per-slot iteration objectives.
    Converge {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Runs the built-in cross-validation suite.
    Selfcheck,
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &common.scenario {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.rng_seed = seed;
    }
    for kv in &common.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {kv:?} is not key=value")))?;
        cfg.apply_override(key.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_axis(axis: &str) -> Result<(String, Vec<String>)> {
    let (name, values) = axis
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("axis {axis:?} is not name:v1,v2,...")))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
    if name.is_empty() || values.iter().any(String::is_empty) {
        return Err(Error::Config(format!("axis {axis:?} has empty name or values")));
    }
    Ok((name.to_string(), values))
}

fn cmd_run(common: &CommonArgs, policy: &str) -> Result<()> {
    let cfg = load_config(common)?;
    let policy = Policy::parse(policy)?;
    let ep = run_episode(&cfg, policy)?;
    sim::write_csv(&common.out.join("aoi_trace.csv"), &aoi_trace_csv(&ep))?;
    if policy == Policy::Proposed {
        sim::write_csv(&common.out.join("convergence.csv"), &convergence_csv(&ep))?;
    }
    println!("policy={}", policy.name());
    println!("weighted_sum_aoi={}", ep.weighted_sum_aoi);
    println!(
        "audit_ok={} wasted_slots={} max_snr_mismatch={:.3e}",
        ep.audit.all_ok(),
        ep.audit.wasted_slots,
        ep.audit.max_snr_mismatch
    );
    println!("wrote {}", common.out.join("aoi_trace.csv").display());
    Ok(())
}

fn cmd_sweep(
    common: &CommonArgs,
    axis: &str,
    seeds_per_point: u64,
    policy: Option<&str>,
) -> Result<()> {
    if seeds_per_point == 0 {
        return Err(Error::Config("seeds-per-point must be at least 1".into()));
    }
    let cfg = load_config(common)?;
    let (axis_name, axis_values) = parse_axis(axis)?;
    let policies: Vec<Policy> = match policy {
        Some(p) => vec![Policy::parse(p)?],
        None => vec![
            Policy::Proposed,
            Policy::FixedLocation,
            Policy::GreedyNoMove,
            Policy::RandomSchedule,
        ],
    };
    let seeds: Vec<u64> = (0..seeds_per_point).map(|i| cfg.rng_seed.wrapping_add(i)).collect();
    let rows = run_sweep(&cfg, &policies, &axis_name, &axis_values, &seeds)?;
    let path = common.out.join("sweep.csv");
    sim::write_csv(&path, &sweep_csv(&rows))?;
    for policy in &policies {
        for value in &axis_values {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.policy == policy.name() && r.axis_value == *value)
                .map(|r| r.weighted_sum_aoi)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            println!("policy={} {}={} mean_weighted_sum_aoi={}", policy.name(), axis_name, value, mean);
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_converge(common: &CommonArgs) -> Result<()> {
    let cfg = load_config(common)?;
    let ep = run_episode(&cfg, Policy::Proposed)?;
    let path = common.out.join("convergence.csv");
    sim::write_csv(&path, &convergence_csv(&ep))?;
    let slots = ep.traces.len();
    let converged = ep.traces.iter().filter(|t| t.converged).count();
    let max_iters = ep.traces.iter().map(|t| t.objectives.len()).max().unwrap_or(0);
    println!("slots={slots} converged={converged} max_iterations={max_iters}");
    println!("weighted_sum_aoi={}", ep.weighted_sum_aoi);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_selfcheck() -> Result<()> {
    let results = selfcheck::run_all();
    let mut failed = 0;
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", r.name, r.detail);
        failed += !r.passed as usize;
    }
    if failed > 0 {
        return Err(Error::Solver(format!("{failed} of {} self-checks failed", results.len())));
    }
    println!("all {} self-checks passed", results.len());
    Ok(())
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Run { common, policy } => cmd_run(common, policy),
        Cmd::Sweep { common, axis, seeds_per_point, policy } => {
            cmd_sweep(common, axis, *seeds_per_point, policy.as_deref())
        }
        Cmd::Converge { common } => cmd_converge(common),
        Cmd::Selfcheck => cmd_selfcheck(),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
