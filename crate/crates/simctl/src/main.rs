use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use dasim_core::scenario::{Mode, ScenarioConfig};
use simctl::{load_scenario, parse_scenario, parse_schemes, parse_seeds, run_schemes, worker_pool, RunOptions, TraceLevel};

#[derive(Parser)]
#[command(name = "simctl", version, about = "Run and compare digital-agent slicing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; the default preset when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Dotted-path override, e.g. `--set slicing.price=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// `all` or a comma list of proposed, wo-da, pdrl-l1, hsla-l2.
    #[arg(long, default_value = "all")]
    scheme: String,
    /// `N`, `A..B` (inclusive) or a comma list. Defaults to the scenario's rng_seed.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    trace_level: TraceLevel,
    /// Evaluate with these policies instead of training.
    #[arg(long)]
    policy_in: Option<PathBuf>,
    /// Save each seed's trained policies into this directory.
    #[arg(long)]
    policy_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run schemes over seeds and write one result bundle per scheme.
    Run(Common),
    /// Repeat `run` for several population sizes, one subdirectory `k<N>` each.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "16,18,20,22,24")]
        k: Vec<usize>,
    },
    /// Print a comparison table of every bundle under DIR and write plot-ready CSVs.
    Report {
        dir: PathBuf,
        /// Where the CSVs go; DIR/report by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default scenario as TOML.
    Defaults,
}

fn scenario(c: &Common) -> Result<ScenarioConfig> {
    Ok(match &c.scenario {
        Some(p) => load_scenario(p, &c.set)?,
        None => parse_scenario("", &c.set)?,
    })
}

fn execute(cfg: &ScenarioConfig, c: &Common, out: &std::path::Path) -> Result<()> {
    let schemes = parse_schemes(&c.scheme)?;
    let seeds = match &c.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![cfg.rng_seed],
    };
    let opts = RunOptions { trace: c.trace_level, policy_in: c.policy_in.clone(), policy_out: c.policy_out.clone() };
    let pool = worker_pool()?;
    let results = run_schemes(&pool, cfg, &schemes, &seeds, out, &opts)?;
    for r in results {
        if let Some(s) = r.summary {
            println!(
                "k={:<3} {:<9} ela_ratio={:.4} qoe_median={:.4} qoe_iqr={:.4} violations={}",
                s.users, s.scheme, s.mean_ela_ratio, s.qoe_box.median, s.qoe_box.iqr, s.violations
            );
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(c) => {
            let cfg = scenario(&c)?;
            execute(&cfg, &c, &c.out)
        }
        Command::Sweep { common, k } => {
            let base = scenario(&common)?;
            for n in k {
                let mut cfg = base.clone();
                cfg.num_users = n;
                if cfg.mode == Mode::Standard && !dasim_core::scenario::STANDARD_USER_COUNTS.contains(&n) {
                    cfg.mode = Mode::Free;
                }
                cfg.validate()?;
                execute(&cfg, &common, &common.out.join(format!("k{n}")))?;
            }
            Ok(())
        }
        Command::Report { dir, out } => {
            let out = out.unwrap_or_else(|| dir.join("report"));
            print!("{}", simctl::report::report(&dir, &out)?);
            Ok(())
        }
        Command::Defaults => {
            print!("{}", simctl::config::default_scenario_toml());
            Ok(())
        }
    }
}
