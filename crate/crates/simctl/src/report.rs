//! Comparison tables over result bundles.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::output::{read_summary, Summary};

/// Every `summary.json` below `root`, in path order.
pub fn find_summaries(root: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = std::fs::read_dir(&dir).with_context(|| format!("listing {}", dir.display()))?;
        for e in entries {
            let path = e?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "summary.json") {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub bundle: String,
    pub scheme: String,
    pub users: usize,
    pub seeds: usize,
    pub mean_ela_ratio: f64,
    pub qoe_median: f64,
    pub qoe_iqr: f64,
    pub violations: u64,
}

fn bundle_name(root: &Path, summary_path: &Path) -> String {
    let dir = summary_path.parent().unwrap_or(root);
    let rel = dir.strip_prefix(root).unwrap_or(dir);
    let s = rel.display().to_string();
    if s.is_empty() {
        ".".into()
    } else {
        s
    }
}

pub fn load_all(root: &Path) -> Result<Vec<(String, Summary)>> {
    find_summaries(root)?.into_iter().map(|p| Ok((bundle_name(root, &p), read_summary(&p)?))).collect()
}

pub fn table_rows(summaries: &[(String, Summary)]) -> Vec<TableRow> {
    let mut rows: Vec<TableRow> = summaries
        .iter()
        .map(|(bundle, s)| TableRow {
            bundle: bundle.clone(),
            scheme: s.scheme.clone(),
            users: s.users,
            seeds: s.seeds.len(),
            mean_ela_ratio: s.mean_ela_ratio,
            qoe_median: s.qoe_box.median,
            qoe_iqr: s.qoe_box.iqr,
            violations: s.violations,
        })
        .collect();
    rows.sort_by(|a, b| (a.users, &a.bundle).cmp(&(b.users, &b.bundle)));
    rows
}

pub fn render_table(rows: &[TableRow]) -> String {
    let mut out = String::new();
    let w = rows.iter().map(|r| r.bundle.len()).max().unwrap_or(6).max(6);
    writeln!(out, "{:<w$}  {:<9} {:>5} {:>5} {:>9} {:>10} {:>8} {:>10}", "bundle", "scheme", "k", "seeds", "ela_ratio", "qoe_median", "qoe_iqr", "violations")
        .unwrap();
    for r in rows {
        writeln!(
            out,
            "{:<w$}  {:<9} {:>5} {:>5} {:>9.4} {:>10.4} {:>8.4} {:>10}",
            r.bundle, r.scheme, r.users, r.seeds, r.mean_ela_ratio, r.qoe_median, r.qoe_iqr, r.violations
        )
        .unwrap();
    }
    out
}

#[derive(Serialize)]
struct CdfRow<'a> {
    bundle: &'a str,
    scheme: &'a str,
    users: usize,
    ela_ratio: f64,
    cumulative: f64,
}

#[derive(Serialize)]
struct BoxRow<'a> {
    bundle: &'a str,
    scheme: &'a str,
    users: usize,
    whisker_lo: f64,
    q1: f64,
    median: f64,
    q3: f64,
    whisker_hi: f64,
    outliers: usize,
}

/// Renders the comparison table and writes `table.csv`, `cdf.csv` and
/// `box.csv` into `out`.
pub fn report(root: &Path, out: &Path) -> Result<String> {
    let all = load_all(root)?;
    if all.is_empty() {
        anyhow::bail!("no summary.json under {}", root.display());
    }
    std::fs::create_dir_all(out)?;
    let rows = table_rows(&all);
    let mut t = csv::Writer::from_path(out.join("table.csv"))?;
    for r in &rows {
        t.serialize(r)?;
    }
    t.flush()?;
    let mut cdf = csv::Writer::from_path(out.join("cdf.csv"))?;
    let mut bx = csv::Writer::from_path(out.join("box.csv"))?;
    for (bundle, s) in &all {
        for &[x, f] in &s.ela_ratio_cdf {
            cdf.serialize(CdfRow { bundle, scheme: &s.scheme, users: s.users, ela_ratio: x, cumulative: f })?;
        }
        let b = &s.qoe_box;
        bx.serialize(BoxRow {
            bundle,
            scheme: &s.scheme,
            users: s.users,
            whisker_lo: b.whisker_lo,
            q1: b.q1,
            median: b.median,
            q3: b.q3,
            whisker_hi: b.whisker_hi,
            outliers: b.outliers,
        })?;
    }
    cdf.flush()?;
    bx.flush()?;
    Ok(render_table(&rows))
}
