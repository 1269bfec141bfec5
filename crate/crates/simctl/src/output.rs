//! Result bundles: CSV dumps and `summary.json`.
//!
//! A bundle is one directory per (scenario, scheme) holding
//!
//! * `users.csv`: `seed,user,structure,ela,alpha,beta,speed_kmh,fit_structure,fit_alpha,fit_beta`
//! * `slots.csv`: `seed,t,user,serving_bs,rate,allocated_bw,allocated_compute,buffer,rebuffer,quality,behavior,complexity,qoe_sample,period_end`
//! * `demands.csv`: `seed,window,user,group,bandwidth,compute,feasible,tier`
//! * `slices.csv`: `seed,window,window_min,group,bs,bandwidth,compute,mechanism`
//! * `windows.csv`: `seed,window,start_slot,slots,window_min,ela_ratio`
//! * `summary.json`, described by `schemas/summary.schema.json`
//!
//! Rows are ordered by seed, then by time. Units: Hz, bit/s, cycles/s,
//! seconds and MOS.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use dasim_core::harness::{summarize, BoxStats, SeedRun};
use serde::{Deserialize, Serialize};

/// How much per-slot detail a bundle carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TraceLevel {
    /// Every CSV including the per-slot records.
    Full,
    /// Everything except `slots.csv`.
    Windows,
    /// `summary.json` only.
    Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: usize,
}

impl From<BoxStats> for BoxSummary {
    fn from(b: BoxStats) -> Self {
        Self {
            median: b.median,
            q1: b.q1,
            q3: b.q3,
            iqr: b.iqr(),
            whisker_lo: b.whisker_lo,
            whisker_hi: b.whisker_hi,
            outliers: b.outliers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub format_version: u32,
    pub scheme: String,
    pub users: usize,
    pub seeds: Vec<u64>,
    pub config_hash: String,
    pub eval_slots: u64,
    pub mean_ela_ratio: f64,
    pub ela_ratio_by_seed: Vec<f64>,
    /// `[ratio, cumulative fraction]` steps over all windows of all seeds.
    pub ela_ratio_cdf: Vec<[f64; 2]>,
    pub qoe_box: BoxSummary,
    pub windows: usize,
    pub window_minutes: Vec<u32>,
    pub violations: u64,
    pub model_updates: usize,
    pub games_played: usize,
    pub games_converged: usize,
    pub infeasible_demand_fraction: f64,
    pub mean_training_reward: Option<f64>,
}

pub const SUMMARY_VERSION: u32 = 1;

pub fn build_summary(runs: &[SeedRun], config_hash: &str, eval_slots: u64) -> Result<Summary> {
    let s = summarize(runs)?;
    let demands: Vec<bool> = runs.iter().flat_map(|r| r.demands.iter().map(|d| d.feasible)).collect();
    let infeasible = if demands.is_empty() {
        0.0
    } else {
        demands.iter().filter(|f| !**f).count() as f64 / demands.len() as f64
    };
    let rewards: Vec<f64> = runs
        .iter()
        .filter(|r| !r.training_rewards.is_empty())
        .map(|r| {
            // Mean over the last tenth of training.
            let n = r.training_rewards.len();
            let tail = &r.training_rewards[n - (n / 10).max(1)..];
            tail.iter().sum::<f64>() / tail.len() as f64
        })
        .collect();
    Ok(Summary {
        format_version: SUMMARY_VERSION,
        scheme: s.scheme.name().into(),
        users: s.users,
        seeds: s.seeds,
        config_hash: config_hash.into(),
        eval_slots,
        mean_ela_ratio: s.mean_ela_ratio,
        ela_ratio_by_seed: s.ela_ratio_by_seed,
        ela_ratio_cdf: s.ela_ratio_cdf.iter().map(|&(x, f)| [x, f]).collect(),
        qoe_box: s.qoe_box.into(),
        windows: s.windows,
        window_minutes: runs.iter().flat_map(|r| r.windows.iter().map(|w| w.window_min)).collect(),
        violations: s.violations,
        model_updates: s.model_updates,
        games_played: runs.iter().map(|r| r.games.len()).sum(),
        games_converged: runs.iter().map(|r| r.games.iter().filter(|g| g.converged).count()).sum(),
        infeasible_demand_fraction: infeasible,
        mean_training_reward: if rewards.is_empty() {
            None
        } else {
            Some(rewards.iter().sum::<f64>() / rewards.len() as f64)
        },
    })
}

#[derive(Serialize)]
struct UserRow {
    seed: u64,
    user: u32,
    structure: u8,
    ela: f64,
    alpha: f64,
    beta: f64,
    speed_kmh: f64,
    fit_structure: u8,
    fit_alpha: f64,
    fit_beta: f64,
}

#[derive(Serialize)]
struct SlotRow {
    seed: u64,
    t: u64,
    user: u32,
    serving_bs: u32,
    rate: f64,
    allocated_bw: f64,
    allocated_compute: f64,
    buffer: f64,
    rebuffer: f64,
    quality: f64,
    behavior: f64,
    complexity: f64,
    qoe_sample: f64,
    period_end: bool,
}

#[derive(Serialize)]
struct DemandCsv {
    seed: u64,
    window: usize,
    user: u32,
    group: u32,
    bandwidth: f64,
    compute: f64,
    feasible: bool,
    tier: usize,
}

#[derive(Serialize)]
struct SliceCsv<'a> {
    seed: u64,
    window: usize,
    window_min: u32,
    group: u32,
    bs: u32,
    bandwidth: f64,
    compute: f64,
    mechanism: &'a str,
}

#[derive(Serialize)]
struct WindowCsv {
    seed: u64,
    window: usize,
    start_slot: u64,
    slots: u64,
    window_min: u32,
    ela_ratio: f64,
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

/// Writes the CSV files of `runs` into `dir`.
pub fn write_tables(dir: &Path, runs: &[SeedRun], level: TraceLevel) -> Result<()> {
    if level == TraceLevel::Summary {
        return Ok(());
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut users = csv_writer(dir, "users.csv")?;
    let mut demands = csv_writer(dir, "demands.csv")?;
    let mut slices = csv_writer(dir, "slices.csv")?;
    let mut windows = csv_writer(dir, "windows.csv")?;
    let mut slots = if level == TraceLevel::Full { Some(csv_writer(dir, "slots.csv")?) } else { None };
    for r in runs {
        let seed = r.seed;
        for (p, m) in r.profiles.iter().zip(&r.models) {
            users.serialize(UserRow {
                seed,
                user: p.id,
                structure: p.structure_index,
                ela: p.ela,
                alpha: p.true_impact.0,
                beta: p.true_impact.1,
                speed_kmh: p.speed_kmh,
                fit_structure: m.structure_index(),
                fit_alpha: m.impact.alpha,
                fit_beta: m.impact.beta,
            })?;
        }
        for d in &r.demands {
            demands.serialize(DemandCsv {
                seed,
                window: d.window,
                user: d.user,
                group: d.group,
                bandwidth: d.bandwidth,
                compute: d.compute,
                feasible: d.feasible,
                tier: d.tier,
            })?;
        }
        for s in &r.slices {
            slices.serialize(SliceCsv {
                seed,
                window: s.window,
                window_min: s.window_min,
                group: s.group,
                bs: s.bs,
                bandwidth: s.bandwidth,
                compute: s.compute,
                mechanism: s.mechanism,
            })?;
        }
        for w in &r.windows {
            windows.serialize(WindowCsv {
                seed,
                window: w.window,
                start_slot: w.start_slot,
                slots: w.slots,
                window_min: w.window_min,
                ela_ratio: w.ela_ratio,
            })?;
        }
        if let Some(out) = slots.as_mut() {
            for s in &r.slots {
                out.serialize(SlotRow {
                    seed,
                    t: s.t,
                    user: s.user,
                    serving_bs: s.serving_bs,
                    rate: s.rate,
                    allocated_bw: s.allocated_bw,
                    allocated_compute: s.allocated_compute,
                    buffer: s.buffer,
                    rebuffer: s.rebuffer,
                    quality: s.quality,
                    behavior: s.behavior,
                    complexity: s.complexity,
                    qoe_sample: s.qoe_sample,
                    period_end: s.period_end,
                })?;
            }
        }
    }
    users.flush()?;
    demands.flush()?;
    slices.flush()?;
    windows.flush()?;
    if let Some(mut s) = slots {
        s.flush()?;
    }
    Ok(())
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("summary.json");
    let mut f = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, summary)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
