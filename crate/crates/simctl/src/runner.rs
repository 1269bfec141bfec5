//! Seed/scheme fan-out over a worker pool.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use dasim_core::bench::SchemeId;
use dasim_core::harness::{run_seed, SeedRun, TrainedPolicies};
use dasim_core::scenario::ScenarioConfig;
use rayon::prelude::*;

use crate::checkpoint;
use crate::config::config_hash;
use crate::output::{build_summary, write_summary, write_tables, Summary, TraceLevel};

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "SIMCTL_THREADS";

/// Reads a thread cap; unset or empty means no cap.
pub fn parse_threads(value: Option<&str>) -> Result<Option<usize>> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => {
            let n: usize = v.parse().with_context(|| format!("{THREADS_VAR}={v} is not a count"))?;
            if n == 0 {
                return Err(anyhow!("{THREADS_VAR} must be at least 1"));
            }
            Ok(Some(n))
        }
    }
}

/// A pool honouring `SIMCTL_THREADS`.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let cap = parse_threads(std::env::var(THREADS_VAR).ok().as_deref())?;
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cap {
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub trace: TraceLevel,
    /// Policies used by every seed instead of training.
    pub policy_in: Option<PathBuf>,
    /// Directory receiving `<scheme>-seed<N>.policy` for each seed.
    pub policy_out: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { trace: TraceLevel::Full, policy_in: None, policy_out: None }
    }
}

/// Outcome of one scheme over a seed list.
pub struct SchemeResult {
    pub scheme: SchemeId,
    pub runs: Vec<SeedRun>,
    pub summary: Option<Summary>,
}

/// Parses `3`, `1,4,9`, `1..10` or `1..=10` (both ranges inclusive).
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (lo, hi): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if lo > hi {
            return Err(anyhow!("empty seed range {spec}"));
        }
        return Ok((lo..=hi).collect());
    }
    let seeds: Vec<u64> =
        spec.split(',').map(|s| s.trim().parse::<u64>()).collect::<std::result::Result<_, _>>()
            .with_context(|| format!("bad seed list `{spec}`"))?;
    if seeds.is_empty() {
        return Err(anyhow!("no seeds"));
    }
    Ok(seeds)
}

/// Parses `all` or a comma list of scheme names.
pub fn parse_schemes(spec: &str) -> Result<Vec<SchemeId>> {
    if spec.trim() == "all" {
        return Ok(SchemeId::ALL.to_vec());
    }
    spec.split(',').map(|s| s.trim().parse::<SchemeId>().map_err(|e| anyhow!("{e}"))).collect()
}

fn policy_path(dir: &Path, scheme: SchemeId, seed: u64) -> PathBuf {
    dir.join(format!("{}-seed{seed}.policy", scheme.name()))
}

/// Runs every (scheme, seed) pair on `pool`, then writes one bundle per
/// scheme under `out/<scheme>`. Results are merged in (scheme, seed) order.
/// Bundles of completed seeds are written even when another seed fails;
/// the first failure is returned afterwards.
pub fn run_schemes(
    pool: &rayon::ThreadPool,
    cfg: &ScenarioConfig,
    schemes: &[SchemeId],
    seeds: &[u64],
    out: &Path,
    opts: &RunOptions,
) -> Result<Vec<SchemeResult>> {
    cfg.validate()?;
    let given: Option<TrainedPolicies> = opts.policy_in.as_deref().map(checkpoint::load).transpose()?;
    let jobs: Vec<(SchemeId, u64)> = schemes.iter().flat_map(|&s| seeds.iter().map(move |&d| (s, d))).collect();
    let outcomes: Vec<Result<(SeedRun, TrainedPolicies)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(scheme, seed)| {
                run_seed(cfg, scheme, seed, given.as_ref())
                    .with_context(|| format!("scheme {} seed {seed}", scheme.name()))
            })
            .collect()
    });

    let hash = config_hash(cfg);
    let mut first_error = None;
    let mut results = Vec::new();
    let mut outcomes = outcomes.into_iter();
    for &scheme in schemes {
        let mut runs = Vec::new();
        for _ in seeds {
            match outcomes.next().expect("one outcome per job") {
                Ok((run, policies)) => {
                    if let Some(dir) = &opts.policy_out {
                        std::fs::create_dir_all(dir)?;
                        checkpoint::save(&policy_path(dir, scheme, run.seed), &policies)?;
                    }
                    runs.push(run);
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        let dir = out.join(scheme.name());
        let summary = if runs.is_empty() {
            None
        } else {
            write_tables(&dir, &runs, opts.trace)?;
            let s = build_summary(&runs, &hash, cfg.eval_slots())?;
            write_summary(&dir, &s)?;
            Some(s)
        };
        results.push(SchemeResult { scheme, runs, summary });
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(results),
    }
}
